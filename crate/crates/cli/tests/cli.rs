//! End-to-end CLI tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mevr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mevr"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

struct Workdir {
    dir: PathBuf,
}

impl Workdir {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("mevr-cli-test-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Self { dir }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }
}

impl Drop for Workdir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.dir);
    }
}

const GAME: &str = r#"{"n": 3, "values": [0, 1, 1, 4, 1, 2, 4, 5], "monotone": true}"#;
const AUCTION: &str = r#"{
    "bids": [1.0, 1.1],
    "conflicts": [[1, 2]],
    "oracle": {"n": 2, "values": [0, 10, 10, 10], "monotone": true},
    "seed": 42
}"#;

#[test]
fn operators_csv_has_one_row_per_player_and_operator() {
    let work = Workdir::new("operators");
    work.file("game.json", GAME);
    let out = mevr(
        &["operators", "--game", "game.json", "--op", "shapley,banzhaf", "--format", "csv"],
        &work.dir,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("player,operator,payment,lower,upper"));
    assert_eq!(text.lines().count(), 7);
    assert!(text.contains("2,banzhaf,2.5,2.5,2.5"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let work = Workdir::new("determinism");
    work.file("game.json", GAME);
    work.file("auction.json", AUCTION);
    for args in [
        vec!["operators", "--game", "game.json", "--op", "psi_bar", "--k-max", "3"],
        vec!["audit", "--op", "theta", "--axioms", "S,ND,SP", "--format", "csv"],
        vec!["sybil-search", "--game", "game.json", "--player", "2", "--k-max", "3"],
        vec!["prior-sweep", "--support", "3,4", "--steps", "5"],
        vec!["auction", "--auction", "auction.json", "--mechanism", "mev_max"],
        vec!["scenario", "--name", "sybil-split", "--epsilon", "0.0", "--seed", "9"],
    ] {
        let first = mevr(&args, &work.dir);
        let second = mevr(&args, &work.dir);
        assert!(first.status.success(), "{args:?}: {}", stderr(&first));
        assert_eq!(first.stdout, second.stdout, "{args:?} not deterministic");
    }
}

#[test]
fn auction_reports_threshold_payment() {
    let work = Workdir::new("auction");
    work.file("auction.json", AUCTION);
    let out = mevr(&["auction", "--auction", "auction.json"], &work.dir);
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(parsed["schema"], 1);
    assert_eq!(parsed["report"]["outcome"]["allocation"], 2);
    assert_eq!(parsed["report"]["outcome"]["payments"][1], 1.0);
}

#[test]
fn prior_lp_solves_the_documented_prior() {
    let work = Workdir::new("prior");
    work.file("prior.json", r#"{"p": {"3": 0.2, "4": 0.5, "5": 0.3}, "y_max": 10}"#);
    let out = mevr(&["prior-lp", "--prior", "prior.json"], &work.dir);
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let welfare = parsed["report"]["policy"]["expected_welfare"].as_f64().unwrap();
    let baseline = parsed["report"]["prior_free_welfare"].as_f64().unwrap();
    assert!(welfare >= baseline);
}

#[test]
fn cfmm_game_emits_the_owner_game() {
    let work = Workdir::new("cfmm");
    work.file(
        "graph.json",
        r#"{"numeraire": "A", "pools": [
            {"pair": ["A","B"], "reserves": [100.0, 100.0], "kind": "cp", "owner": 1},
            {"pair": ["B","C"], "reserves": [100.0, 100.0], "kind": "cp", "owner": 2},
            {"pair": ["C","A"], "reserves": [100.0, 120.0], "kind": "cp", "owner": 3}
        ]}"#,
    );
    let out = mevr(&["cfmm-game", "--graph", "graph.json"], &work.dir);
    assert!(out.status.success(), "{}", stderr(&out));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(parsed["report"]["owners"], serde_json::json!([1, 2, 3]));
    assert!(parsed["report"]["full_graph_arbitrage"]["profit"].as_f64().unwrap() > 0.0);

    let attack = mevr(
        &["cfmm-attack", "--graph", "graph.json", "--pool-index", "0", "--op", "banzhaf"],
        &work.dir,
    );
    assert!(attack.status.success());
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&attack)).unwrap();
    assert!(parsed["report"]["idealized"]["gain"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn scenario_trilemma_reports_failures_for_every_operator() {
    let work = Workdir::new("trilemma");
    let out = mevr(&["scenario", "--name", "trilemma", "--k-max", "2"], &work.dir);
    assert!(out.status.success(), "{}", stderr(&out));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = parsed["report"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert!(!row["failed"].as_array().unwrap().is_empty());
    }
}

#[test]
fn paper_check_prints_a_line_per_criterion_and_exits_zero() {
    let work = Workdir::new("check");
    let out = mevr(&["paper-check"], &work.dir);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 12);
    assert!(text.trim_end().ends_with("12 of 12 reference checks passed"));
}

#[test]
fn validation_errors_exit_one_with_single_line_messages() {
    let work = Workdir::new("errors");
    work.file("bad.json", r#"{"n": 2, "values": [0, 3, 1, 2], "monotone": true}"#);

    let missing = mevr(&["operators", "--game", "nope.json"], &work.dir);
    assert_eq!(missing.status.code(), Some(1));
    assert_eq!(stderr(&missing).lines().count(), 1);

    let invalid = mevr(&["operators", "--game", "bad.json"], &work.dir);
    assert_eq!(invalid.status.code(), Some(1));
    assert!(stderr(&invalid).contains("monotonicity violated"));

    let unknown_op = mevr(&["operators", "--game", "bad.json", "--op", "vcg"], &work.dir);
    assert_eq!(unknown_op.status.code(), Some(1));

    let unknown_sub = mevr(&["not-a-thing"], &work.dir);
    assert_eq!(unknown_sub.status.code(), Some(1));
}

#[test]
fn output_file_flag_writes_the_report() {
    let work = Workdir::new("outfile");
    work.file("game.json", GAME);
    let out = mevr(
        &["operators", "--game", "game.json", "--op", "theta", "--out", "report.json"],
        &work.dir,
    );
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    let written = std::fs::read_to_string(work.dir.join("report.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&written).unwrap();
    assert_eq!(parsed["kind"], "operators");
}

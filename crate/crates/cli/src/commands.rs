//! Subcommand definitions and dispatch.

use crate::output::{debug, envelope, write_json, write_text, Format};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use mevr_core::auction::{allocate, tau_mechanism, AuctionInstance, MechanismId};
use mevr_core::cfmm::{
    cyclic_arb, graph_game, lp_game, token_split_attack, Pool, TokenGraph,
};
use mevr_core::checks;
use mevr_core::game::Game;
use mevr_core::ops::{
    audit, optimal_sybil_strategy, trilemma_demo, AttackFamily, AxiomId, OperatorId,
    SampleConfig, SearchConfig,
};
use mevr_core::prior::{solve_prior_optimal, sweep_priors, PriorModel};
use serde_json::json;
use std::path::{Path, PathBuf};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(
    name = "mevr",
    version,
    about = "Cooperative-game analysis of MEV rebate mechanisms",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run value operators on a game and report per-player payments.
    Operators {
        /// Game JSON file.
        #[arg(long)]
        game: PathBuf,
        /// Comma-separated operators (shapley, banzhaf, banzhaf_clamped,
        /// theta, psi, psi_bar).
        #[arg(long, default_value = "shapley,banzhaf,theta,psi_bar")]
        op: String,
        /// Identity budget for the psi search.
        #[arg(long, default_value_t = 6)]
        k_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Check an operator against the rebate axioms on a seeded sample.
    Audit {
        /// Operator to audit.
        #[arg(long)]
        op: String,
        /// Comma-separated axiom codes (E,S,N,A,M,SM,SP,GSP,2-EF,ND,CP,
        /// a-SE,SPO); defaults to all.
        #[arg(long)]
        axioms: Option<String>,
        /// Use the reduced sample (for search-based operators).
        #[arg(long)]
        light: bool,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Identity budget for extension checks and the psi search.
        #[arg(long, default_value_t = 3)]
        k_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Search for the most profitable Sybil extension against an operator.
    SybilSearch {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, default_value = "shapley")]
        op: String,
        /// Attacking player (1-based).
        #[arg(long)]
        player: usize,
        /// copy, split or mixed.
        #[arg(long, default_value = "mixed")]
        family: String,
        #[arg(long, default_value_t = 6)]
        k_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the prior-optimal symmetric rebate LP.
    PriorLp {
        /// Prior JSON file: {"p": {"3": 0.2, ...}, "y_max": 10}.
        #[arg(long)]
        prior: PathBuf,
        /// Override the truncation of the deviation index.
        #[arg(long)]
        y_max: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the LP across a simplex grid of priors and emit a table.
    PriorSweep {
        /// Comma-separated support counts, e.g. 3,4,5.
        #[arg(long, default_value = "3,4,5")]
        support: String,
        /// Grid denominator: step = 1/steps.
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long)]
        y_max: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Build a cooperative game from CFMM liquidity provision.
    CfmmGame {
        /// Token-graph JSON: the owners' cyclic-arbitrage game.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Pool JSON for the single-pool share game (with --shares and
        /// --prices).
        #[arg(long)]
        pool: Option<PathBuf>,
        /// Comma-separated shares on the simplex, e.g. 0.5,0.3,0.2.
        #[arg(long)]
        shares: Option<String>,
        /// Reference prices "p0,p1" for the pool's two assets.
        #[arg(long)]
        prices: Option<String>,
        #[arg(long, default_value_t = 4)]
        max_cycle_len: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the token-split attack on one pool of a graph.
    CfmmAttack {
        #[arg(long)]
        graph: PathBuf,
        /// Index of the pool to split (0-based).
        #[arg(long)]
        pool_index: usize,
        #[arg(long, default_value = "shapley")]
        op: String,
        #[arg(long, default_value_t = 4)]
        max_cycle_len: usize,
        #[arg(long, default_value_t = 6)]
        k_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a block-space auction mechanism on an instance.
    Auction {
        /// Auction-instance JSON file.
        #[arg(long)]
        auction: PathBuf,
        /// myerson, mev_max or tau.
        #[arg(long, default_value = "myerson")]
        mechanism: String,
        /// Rebate operator for the tau mechanism (theta, psi_bar,
        /// banzhaf_clamped).
        #[arg(long, default_value = "theta")]
        op: String,
        /// Overrides the instance's tie-breaking seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 6)]
        k_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in counterexample scenario.
    Scenario {
        /// sybil-split, negative-result or trilemma.
        #[arg(long)]
        name: String,
        /// Bid gap for sybil-split.
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Complementarity value for negative-result.
        #[arg(long, default_value_t = 1.0)]
        value: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        k_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every built-in reference regression and print a pass/fail table.
    PaperCheck {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Operators { game, op, k_max, out, format } => {
            cmd_operators(&game, &op, k_max, out.as_deref(), format)
        }
        Command::Audit { op, axioms, light, seed, k_max, out, format } => {
            cmd_audit(&op, axioms.as_deref(), light, seed, k_max, out.as_deref(), format)
        }
        Command::SybilSearch { game, op, player, family, k_max, out } => {
            cmd_sybil_search(&game, &op, player, &family, k_max, out.as_deref())
        }
        Command::PriorLp { prior, y_max, out } => cmd_prior_lp(&prior, y_max, out.as_deref()),
        Command::PriorSweep { support, steps, y_max, out, format } => {
            cmd_prior_sweep(&support, steps, y_max, out.as_deref(), format)
        }
        Command::CfmmGame { graph, pool, shares, prices, max_cycle_len, out } => cmd_cfmm_game(
            graph.as_deref(),
            pool.as_deref(),
            shares.as_deref(),
            prices.as_deref(),
            max_cycle_len,
            out.as_deref(),
        ),
        Command::CfmmAttack { graph, pool_index, op, max_cycle_len, k_max, out } => {
            cmd_cfmm_attack(&graph, pool_index, &op, max_cycle_len, k_max, out.as_deref())
        }
        Command::Auction { auction, mechanism, op, seed, k_max, out } => {
            cmd_auction(&auction, &mechanism, &op, seed, k_max, out.as_deref())
        }
        Command::Scenario { name, epsilon, value, seed, k_max, out } => {
            cmd_scenario(&name, epsilon, value, seed, k_max, out.as_deref())
        }
        Command::PaperCheck { out } => cmd_paper_check(out.as_deref()),
    }
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {} file {}", what, path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("{} file {} is not valid", what, path.display()))
}

fn parse_operator(name: &str) -> Result<OperatorId> {
    OperatorId::parse(name).ok_or_else(|| {
        anyhow!("unknown operator {name:?}; choose one of shapley, banzhaf, banzhaf_clamped, theta, psi, psi_bar")
    })
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| anyhow!("bad {what} entry {s:?}")))
        .collect()
}

fn cmd_operators(
    game_path: &Path,
    ops: &str,
    k_max: usize,
    out: Option<&Path>,
    format: Format,
) -> Result<u8> {
    let game: Game = load_json(game_path, "game")?;
    debug(format!("loaded game with {} players", game.n()));
    let search = SearchConfig::with_k_max(k_max);

    let mut reports = Vec::new();
    for name in ops.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let op = parse_operator(name)?;
        reports.push(op.report(&game, &search)?);
    }

    match format {
        Format::Json => {
            let body = json!({ "n": game.n(), "operators": reports });
            write_json(out, &envelope("operators", body))?;
        }
        Format::Csv => {
            let mut csv = String::from("player,operator,payment,lower,upper\n");
            for report in &reports {
                for i in 1..=game.n() {
                    let p = report.payments.payment(i);
                    let (lo, hi) = report
                        .bounds
                        .as_ref()
                        .map(|b| (b[i - 1].lower, b[i - 1].upper))
                        .unwrap_or((p, p));
                    csv.push_str(&format!("{i},{},{p},{lo},{hi}\n", report.operator));
                }
            }
            write_text(out, &csv)?;
        }
    }
    Ok(0)
}

fn cmd_audit(
    op: &str,
    axioms: Option<&str>,
    light: bool,
    seed: u64,
    k_max: usize,
    out: Option<&Path>,
    format: Format,
) -> Result<u8> {
    let operator = parse_operator(op)?;
    let axioms: Vec<AxiomId> = match axioms {
        None => AxiomId::ALL.to_vec(),
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|code| AxiomId::parse(code).ok_or_else(|| anyhow!("unknown axiom {code:?}")))
            .collect::<Result<_>>()?,
    };
    let mut sample = if light || matches!(operator, OperatorId::Psi | OperatorId::PsiBar) {
        SampleConfig::light()
    } else {
        SampleConfig::default()
    };
    sample.seed = seed;
    sample.sybil_k_max = k_max.max(1);
    let search = SearchConfig::with_k_max(k_max.max(1));

    let results = audit(operator, &axioms, &sample, &search)?;
    match format {
        Format::Json => {
            write_json(out, &envelope("audit", serde_json::to_value(&results)?))?;
        }
        Format::Csv => {
            let mut csv = String::from("operator,axiom,passed,cases_checked,witness\n");
            for a in &results {
                let witness = a
                    .witness
                    .as_ref()
                    .map(|w| w.description.replace(',', ";"))
                    .unwrap_or_default();
                csv.push_str(&format!(
                    "{},{},{},{},{witness}\n",
                    a.operator,
                    a.axiom.code(),
                    a.passed,
                    a.cases_checked
                ));
            }
            write_text(out, &csv)?;
        }
    }
    Ok(0)
}

fn cmd_sybil_search(
    game_path: &Path,
    op: &str,
    player: usize,
    family: &str,
    k_max: usize,
    out: Option<&Path>,
) -> Result<u8> {
    let game: Game = load_json(game_path, "game")?;
    let operator = parse_operator(op)?;
    let family = AttackFamily::parse(family)
        .ok_or_else(|| anyhow!("unknown family {family:?}; choose copy, split or mixed"))?;
    let report = optimal_sybil_strategy(
        &game,
        player,
        operator,
        family,
        k_max,
        &SearchConfig::with_k_max(k_max),
    )?;
    write_json(out, &envelope("sybil_search", serde_json::to_value(&report)?))?;
    Ok(0)
}

fn cmd_prior_lp(prior_path: &Path, y_max: Option<usize>, out: Option<&Path>) -> Result<u8> {
    let mut prior: PriorModel = load_json(prior_path, "prior")?;
    if let Some(y) = y_max {
        let masses = prior.support().collect::<std::collections::BTreeMap<_, _>>();
        prior = PriorModel::new(masses, Some(y))?;
    }
    let policy = solve_prior_optimal(&prior)?;
    let body = json!({
        "n_max": prior.n_max(),
        "y_max": prior.y_max(),
        "prior_free_welfare": prior.prior_free_welfare(),
        "policy": policy,
    });
    write_json(out, &envelope("prior_lp", body))?;
    Ok(0)
}

fn cmd_prior_sweep(
    support: &str,
    steps: usize,
    y_max: Option<usize>,
    out: Option<&Path>,
    format: Format,
) -> Result<u8> {
    let support: Vec<usize> = parse_list(support, "support")?;
    if steps == 0 {
        bail!("steps must be positive");
    }
    let table = sweep_priors(&support, steps, y_max)?;
    match format {
        Format::Csv => write_text(out, &table.to_csv())?,
        Format::Json => write_json(out, &envelope("prior_sweep", serde_json::to_value(&table)?))?,
    }
    Ok(0)
}

fn cmd_cfmm_game(
    graph: Option<&Path>,
    pool: Option<&Path>,
    shares: Option<&str>,
    prices: Option<&str>,
    max_cycle_len: usize,
    out: Option<&Path>,
) -> Result<u8> {
    match (graph, pool) {
        (Some(graph_path), None) => {
            let graph: TokenGraph = load_json(graph_path, "token graph")?;
            let gg = graph_game(&graph, max_cycle_len)?;
            let best = cyclic_arb(&graph, max_cycle_len)?;
            let body = json!({
                "owners": gg.owners,
                "game": gg.game,
                "full_graph_arbitrage": best,
            });
            write_json(out, &envelope("cfmm_graph_game", body))?;
        }
        (None, Some(pool_path)) => {
            let pool: Pool = load_json(pool_path, "pool")?;
            let shares: Vec<f64> =
                parse_list(shares.ok_or_else(|| anyhow!("--pool requires --shares"))?, "share")?;
            let prices: Vec<f64> =
                parse_list(prices.ok_or_else(|| anyhow!("--pool requires --prices"))?, "price")?;
            let [p0, p1] = prices[..] else { bail!("--prices takes exactly two values") };
            let game = lp_game(&shares, &pool, (p0, p1))?;
            let body = json!({ "shares": shares, "game": game });
            write_json(out, &envelope("cfmm_lp_game", body))?;
        }
        _ => bail!("give exactly one of --graph or --pool"),
    }
    Ok(0)
}

fn cmd_cfmm_attack(
    graph_path: &Path,
    pool_index: usize,
    op: &str,
    max_cycle_len: usize,
    k_max: usize,
    out: Option<&Path>,
) -> Result<u8> {
    let graph: TokenGraph = load_json(graph_path, "token graph")?;
    let operator = parse_operator(op)?;
    let report = token_split_attack(
        &graph,
        pool_index,
        operator,
        max_cycle_len,
        &SearchConfig::with_k_max(k_max),
    )?;
    write_json(out, &envelope("cfmm_attack", serde_json::to_value(&report)?))?;
    Ok(0)
}

fn cmd_auction(
    auction_path: &Path,
    mechanism: &str,
    op: &str,
    seed: Option<u64>,
    k_max: usize,
    out: Option<&Path>,
) -> Result<u8> {
    let mut inst: AuctionInstance = load_json(auction_path, "auction instance")?;
    if let Some(seed) = seed {
        inst.seed = seed;
    }
    let outcome = match mechanism.to_ascii_lowercase().replace('-', "_").as_str() {
        "tau" => {
            let operator = parse_operator(op)?;
            tau_mechanism(&inst, operator, &SearchConfig::with_k_max(k_max))?
        }
        name => {
            let mech = MechanismId::parse(name).ok_or_else(|| {
                anyhow!("unknown mechanism {mechanism:?}; choose myerson, mev_max or tau")
            })?;
            allocate(&inst, mech)?
        }
    };
    let body = json!({ "mechanism": mechanism, "outcome": outcome });
    write_json(out, &envelope("auction", body))?;
    Ok(0)
}

fn cmd_scenario(
    name: &str,
    epsilon: f64,
    value: f64,
    seed: u64,
    k_max: usize,
    out: Option<&Path>,
) -> Result<u8> {
    let body = match name {
        "sybil-split" => {
            let report = mevr_core::auction::sybil_split_scenario(epsilon, seed)?;
            envelope("scenario_sybil_split", serde_json::to_value(&report)?)
        }
        "negative-result" => {
            let report = mevr_core::auction::negative_result_scenario(value)?;
            envelope("scenario_negative_result", serde_json::to_value(&report)?)
        }
        "trilemma" => {
            let report = trilemma_demo(&SearchConfig::with_k_max(k_max.max(1)))?;
            envelope("scenario_trilemma", serde_json::to_value(&report)?)
        }
        other => bail!("unknown scenario {other:?}; choose sybil-split, negative-result or trilemma"),
    };
    write_json(out, &body)?;
    Ok(0)
}

fn cmd_paper_check(out: Option<&Path>) -> Result<u8> {
    let results = checks::run_all();
    let mut lines = String::new();
    for check in &results {
        lines.push_str(&check.line());
        lines.push('\n');
    }
    let failed = results.iter().filter(|c| !c.passed).count();
    lines.push_str(&format!(
        "{} of {} reference checks passed\n",
        results.len() - failed,
        results.len()
    ));
    write_text(out, &lines)?;
    if failed > 0 {
        // A failing built-in regression is an internal inconsistency.
        return Ok(2);
    }
    Ok(0)
}

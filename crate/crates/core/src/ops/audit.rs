//! Axiom audits: run any operator against the rebate axioms on a
//! deterministic game sample. A failed audit always carries a concrete,
//! re-checkable witness.

use crate::game::{
    coalition_string, members, player_bit, Coalition, Game, GameError, RebateVector, ABS_TOL,
};
use crate::ops::psi::SearchConfig;
use crate::ops::{fingerprint, OperatorId};
use crate::sample;
use crate::sybil::{collusion_game, extend, reduced_game, SybilFamily};
use serde::Serialize;
use std::cell::RefCell;
use std::collections::HashMap;

/// The audited axioms. Short codes follow the usual abbreviations:
/// E, S, N, A, M, SM, SP, GSP, 2-EF, ND, CP, a-SE, SPO.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomId {
    Efficiency,
    Symmetry,
    NullPlayer,
    Additivity,
    Marginality,
    StrongMonotonicity,
    SybilProof,
    GeneralSybilProof,
    TwoEfficiency,
    NoDeficit,
    CollusionProof,
    AlphaSeparable,
    SybilProofOptimal,
}

impl AxiomId {
    pub const ALL: [AxiomId; 13] = [
        AxiomId::Efficiency,
        AxiomId::Symmetry,
        AxiomId::NullPlayer,
        AxiomId::Additivity,
        AxiomId::Marginality,
        AxiomId::StrongMonotonicity,
        AxiomId::SybilProof,
        AxiomId::GeneralSybilProof,
        AxiomId::TwoEfficiency,
        AxiomId::NoDeficit,
        AxiomId::CollusionProof,
        AxiomId::AlphaSeparable,
        AxiomId::SybilProofOptimal,
    ];

    pub fn code(self) -> &'static str {
        match self {
            AxiomId::Efficiency => "E",
            AxiomId::Symmetry => "S",
            AxiomId::NullPlayer => "N",
            AxiomId::Additivity => "A",
            AxiomId::Marginality => "M",
            AxiomId::StrongMonotonicity => "SM",
            AxiomId::SybilProof => "SP",
            AxiomId::GeneralSybilProof => "GSP",
            AxiomId::TwoEfficiency => "2-EF",
            AxiomId::NoDeficit => "ND",
            AxiomId::CollusionProof => "CP",
            AxiomId::AlphaSeparable => "a-SE",
            AxiomId::SybilProofOptimal => "SPO",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().replace('_', "-").as_str() {
            "E" | "EFFICIENCY" => Some(AxiomId::Efficiency),
            "S" | "SYMMETRY" => Some(AxiomId::Symmetry),
            "N" | "NULL" | "NULL-PLAYER" => Some(AxiomId::NullPlayer),
            "A" | "ADDITIVITY" => Some(AxiomId::Additivity),
            "M" | "MARGINALITY" => Some(AxiomId::Marginality),
            "SM" | "STRONG-MONOTONICITY" => Some(AxiomId::StrongMonotonicity),
            "SP" | "SYBIL-PROOF" => Some(AxiomId::SybilProof),
            "GSP" | "GENERAL-SYBIL-PROOF" => Some(AxiomId::GeneralSybilProof),
            "2-EF" | "2EF" | "TWO-EFFICIENCY" => Some(AxiomId::TwoEfficiency),
            "ND" | "NO-DEFICIT" => Some(AxiomId::NoDeficit),
            "CP" | "COLLUSION-PROOF" => Some(AxiomId::CollusionProof),
            "A-SE" | "SE" | "SEPARABLE" => Some(AxiomId::AlphaSeparable),
            "SPO" | "SYBIL-PROOF-OPTIMAL" => Some(AxiomId::SybilProofOptimal),
            _ => None,
        }
    }
}

/// How the audit sample is drawn: the whole unanimity basis up to
/// `unanimity_max_n` players, the built-in deficit example, and a seeded
/// batch of random monotone games per size.
#[derive(Clone, Debug)]
pub struct SampleConfig {
    pub unanimity_max_n: usize,
    pub random_sizes: Vec<usize>,
    pub random_per_size: usize,
    pub seed: u64,
    /// Identity budget for the Sybil-proofness checks.
    pub sybil_k_max: usize,
    pub include_deficit_example: bool,
    /// Overrides the operator-specific default `alpha` for the a-SE check.
    pub alpha_override: Option<f64>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            unanimity_max_n: 6,
            random_sizes: vec![2, 3, 4, 5],
            random_per_size: 200,
            seed: 1729,
            sybil_k_max: 3,
            include_deficit_example: true,
            alpha_override: None,
        }
    }
}

impl SampleConfig {
    /// A reduced sample for expensive (search-based) operators.
    pub fn light() -> Self {
        SampleConfig {
            unanimity_max_n: 4,
            random_sizes: vec![2, 3, 4],
            random_per_size: 25,
            sybil_k_max: 2,
            ..Default::default()
        }
    }
}

/// A concrete counterexample: the game(s), players, and the two sides of
/// the violated inequality.
#[derive(Clone, Debug, Serialize)]
pub struct AuditWitness {
    pub description: String,
    pub game: Game,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_game: Option<Game>,
    pub players: Vec<usize>,
    pub observed: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomAudit {
    pub operator: String,
    pub axiom: AxiomId,
    pub passed: bool,
    pub cases_checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<AuditWitness>,
}

struct Evaluator {
    operator: OperatorId,
    search: SearchConfig,
    cache: RefCell<HashMap<(usize, u128), RebateVector>>,
}

impl Evaluator {
    fn new(operator: OperatorId, search: SearchConfig) -> Self {
        Evaluator { operator, search, cache: RefCell::new(HashMap::new()) }
    }

    fn rebates(&self, game: &Game) -> Result<RebateVector, GameError> {
        let key = (game.n(), fingerprint(game.values()));
        if let Some(hit) = self.cache.borrow().get(&key) {
            return Ok(hit.clone());
        }
        let computed = self.operator.rebates(game, &self.search)?;
        self.cache.borrow_mut().insert(key, computed.clone());
        Ok(computed)
    }
}

struct AuditSample {
    unanimity: Vec<Game>,
    all: Vec<Game>,
}

fn build_sample(cfg: &SampleConfig) -> AuditSample {
    let unanimity = sample::unanimity_basis(cfg.unanimity_max_n);
    let mut all = unanimity.clone();
    if cfg.include_deficit_example {
        all.push(sample::deficit_example());
    }
    all.extend(sample::monotone_sample(&cfg.random_sizes, cfg.random_per_size, cfg.seed));
    AuditSample { unanimity, all }
}

/// Runs the requested axiom checks for one operator. Checks stop at the
/// first violation per axiom and report it as a witness.
pub fn audit(
    operator: OperatorId,
    axioms: &[AxiomId],
    sample_cfg: &SampleConfig,
    search: &SearchConfig,
) -> Result<Vec<AxiomAudit>, GameError> {
    let sample = build_sample(sample_cfg);
    let ev = Evaluator::new(operator, *search);
    let mut out = Vec::with_capacity(axioms.len());
    for &axiom in axioms {
        let (cases, witness) = run_axiom(axiom, &ev, &sample, sample_cfg)?;
        out.push(AxiomAudit {
            operator: operator.name().into(),
            axiom,
            passed: witness.is_none(),
            cases_checked: cases,
            witness,
        });
    }
    Ok(out)
}

type AxiomOutcome = (usize, Option<AuditWitness>);

fn run_axiom(
    axiom: AxiomId,
    ev: &Evaluator,
    sample: &AuditSample,
    cfg: &SampleConfig,
) -> Result<AxiomOutcome, GameError> {
    match axiom {
        AxiomId::Efficiency => check_efficiency(ev, &sample.all),
        AxiomId::Symmetry => check_symmetry(ev, &sample.all),
        AxiomId::NullPlayer => check_null_player(ev, &sample.all),
        AxiomId::Additivity => check_additivity(ev, &sample.all),
        AxiomId::Marginality => check_marginality(ev, &sample.all),
        AxiomId::StrongMonotonicity => check_strong_monotonicity(ev, &sample.all),
        AxiomId::SybilProof => check_sybil_proof(ev, &sample.all, cfg.sybil_k_max),
        AxiomId::GeneralSybilProof => check_general_sybil_proof(ev, &sample.all),
        AxiomId::TwoEfficiency => check_two_efficiency(ev, &sample.all),
        AxiomId::NoDeficit => check_no_deficit(ev, &sample.all),
        AxiomId::CollusionProof => check_collusion_proof(ev, &sample.all),
        AxiomId::AlphaSeparable => check_alpha_separable(ev, &sample.all, cfg.alpha_override),
        AxiomId::SybilProofOptimal => check_spo(ev, &sample.unanimity),
    }
}

fn check_efficiency(ev: &Evaluator, games: &[Game]) -> Result<AxiomOutcome, GameError> {
    let mut cases = 0;
    for g in games {
        cases += 1;
        let welfare = ev.rebates(g)?.welfare();
        if (welfare - g.grand_value()).abs() > ABS_TOL {
            return Ok((
                cases,
                Some(AuditWitness {
                    description: format!(
                        "payments sum to {welfare}, grand coalition is worth {}",
                        g.grand_value()
                    ),
                    game: g.clone(),
                    other_game: None,
                    players: vec![],
                    observed: welfare,
                    bound: g.grand_value(),
                }),
            ));
        }
    }
    Ok((cases, None))
}

fn check_symmetry(ev: &Evaluator, games: &[Game]) -> Result<AxiomOutcome, GameError> {
    let mut cases = 0;
    for g in games {
        let pairs = g.profile().interchangeable_pairs;
        if pairs.is_empty() {
            continue;
        }
        let phi = ev.rebates(g)?;
        for (i, j) in pairs {
            cases += 1;
            if (phi.payment(i) - phi.payment(j)).abs() > ABS_TOL {
                return Ok((
                    cases,
                    Some(AuditWitness {
                        description: format!(
                            "interchangeable players {i} and {j} receive {} and {}",
                            phi.payment(i),
                            phi.payment(j)
                        ),
                        game: g.clone(),
                        other_game: None,
                        players: vec![i, j],
                        observed: phi.payment(i),
                        bound: phi.payment(j),
                    }),
                ));
            }
        }
    }
    Ok((cases, None))
}

fn check_null_player(ev: &Evaluator, games: &[Game]) -> Result<AxiomOutcome, GameError> {
    let mut cases = 0;
    for g in games {
        let nulls = g.profile().null_players;
        if nulls.is_empty() {
            continue;
        }
        let phi = ev.rebates(g)?;
        for i in nulls {
            cases += 1;
            if phi.payment(i).abs() > ABS_TOL {
                return Ok((
                    cases,
                    Some(AuditWitness {
                        description: format!("null player {i} receives {}", phi.payment(i)),
                        game: g.clone(),
                        other_game: None,
                        players: vec![i],
                        observed: phi.payment(i),
                        bound: 0.0,
                    }),
                ));
            }
        }
    }
    Ok((cases, None))
}

fn check_additivity(ev: &Evaluator, games: &[Game]) -> Result<AxiomOutcome, GameError> {
    let mut by_n: HashMap<usize, Vec<&Game>> = HashMap::new();
    for g in games {
        by_n.entry(g.n()).or_default().push(g);
    }
    let mut sizes: Vec<usize> = by_n.keys().copied().collect();
    sizes.sort_unstable();

    let mut cases = 0;
    for n in sizes {
        let group = &by_n[&n];
        for pair in group.chunks_exact(2) {
            cases += 1;
            let (a, b) = (pair[0], pair[1]);
            let total = a.sum(b)?;
            let pa = ev.rebates(a)?;
            let pb = ev.rebates(b)?;
            let pt = ev.rebates(&total)?;
            for i in 1..=n {
                let want = pa.payment(i) + pb.payment(i);
                if (pt.payment(i) - want).abs() > ABS_TOL {
                    return Ok((
                        cases,
                        Some(AuditWitness {
                            description: format!(
                                "player {i}: payment on the sum game is {}, sum of payments is {want}",
                                pt.payment(i)
                            ),
                            game: a.clone(),
                            other_game: Some(b.clone()),
                            players: vec![i],
                            observed: pt.payment(i),
                            bound: want,
                        }),
                    ));
                }
            }
        }
    }
    Ok((cases, None))
}

/// Adds a deterministic additive background for every player but `i`;
/// `i`'s marginals are untouched, so a marginal operator must not move.
fn marginality_partner(g: &Game, i: usize) -> Result<Game, GameError> {
    let worths: Vec<f64> = (1..=g.n())
        .map(|j| if j == i { 0.0 } else { 0.25 * j as f64 })
        .collect();
    g.sum(&Game::additive(&worths)?)
}

fn check_marginality(ev: &Evaluator, games: &[Game]) -> Result<AxiomOutcome, GameError> {
    let mut cases = 0;
    for g in games {
        let phi = ev.rebates(g)?;
        for i in 1..=g.n() {
            cases += 1;
            let partner = marginality_partner(g, i)?;
            let phi2 = ev.rebates(&partner)?;
            if (phi.payment(i) - phi2.payment(i)).abs() > ABS_TOL {
                return Ok((
                    cases,
                    Some(AuditWitness {
                        description: format!(
                            "player {i} has identical marginals in both games but payments {} vs {}",
                            phi.payment(i),
                            phi2.payment(i)
                        ),
                        game: g.clone(),
                        other_game: Some(partner),
                        players: vec![i],
                        observed: phi2.payment(i),
                        bound: phi.payment(i),
                    }),
                ));
            }
        }
    }
    Ok((cases, None))
}

fn check_strong_monotonicity(ev: &Evaluator, games: &[Game]) -> Result<AxiomOutcome, GameError> {
    let mut cases = 0;
    for g in games {
        let phi = ev.rebates(g)?;
        for i in 1..=g.n() {
            cases += 1;
            // Bump i's marginals upward with a scaled unanimity game
            // containing i; everyone's marginals weakly rise, i's strictly
            // on coalitions containing the partner.
            let partner = if g.n() == 1 { i } else { i % g.n() + 1 };
            let r = player_bit(i) | player_bit(partner);
            let bumped = g.sum(&Game::unanimity(g.n(), r)?.scale(0.5)?)?;
            let phi2 = ev.rebates(&bumped)?;
            if phi2.payment(i) < phi.payment(i) - ABS_TOL {
                return Ok((
                    cases,
                    Some(AuditWitness {
                        description: format!(
                            "raising player {i}'s marginals lowered the payment from {} to {}",
                            phi.payment(i),
                            phi2.payment(i)
                        ),
                        game: g.clone(),
                        other_game: Some(bumped),
                        players: vec![i],
                        observed: phi2.payment(i),
                        bound: phi.payment(i),
                    }),
                ));
            }
        }
    }
    Ok((cases, None))
}

fn check_sybil_proof(ev: &Evaluator, games: &[Game], k_max: usize) -> Result<AxiomOutcome, GameError> {
    let mut cases = 0;
    for g in games {
        let phi = ev.rebates(g)?;
        for i in 1..=g.n() {
            if phi.payment(i) < 0.0 {
                continue;
            }
            for family in [SybilFamily::Copy, SybilFamily::Split] {
                for k in 1..=k_max {
                    cases += 1;
                    let ext = extend(g, i, family, k)?;
                    let rebates = ev.rebates(ext.extended())?;
                    let aggregated = rebates.total_over(&ext.attacker_identities());
                    if aggregated > phi.payment(i) + ABS_TOL {
                        return Ok((
                            cases,
                            Some(AuditWitness {
                                description: format!(
                                    "{} of player {i} with {k} new identities pays {aggregated} > {}",
                                    family.name(),
                                    phi.payment(i)
                                ),
                                game: g.clone(),
                                other_game: Some(ext.extended().clone()),
                                players: ext.attacker_identities(),
                                observed: aggregated,
                                bound: phi.payment(i),
                            }),
                        ));
                    }
                }
            }
        }
    }
    Ok((cases, None))
}

fn check_general_sybil_proof(ev: &Evaluator, games: &[Game]) -> Result<AxiomOutcome, GameError> {
    let mut cases = 0;
    for g in games {
        let phi = ev.rebates(g)?;
        for k_set in 1..(1u64 << g.n()) as Coalition {
            cases += 1;
            let merged = reduced_game(g, k_set)?;
            let split_total: f64 = members(k_set).map(|i| phi.payment(i)).sum();
            let merged_payment = ev.rebates(merged.game())?.payment(merged.merged_player());
            if split_total > merged_payment + ABS_TOL {
                return Ok((
                    cases,
                    Some(AuditWitness {
                        description: format!(
                            "identities {} together receive {split_total} > {merged_payment} paid to their merge",
                            coalition_string(k_set)
                        ),
                        game: g.clone(),
                        other_game: Some(merged.game().clone()),
                        players: members(k_set).collect(),
                        observed: split_total,
                        bound: merged_payment,
                    }),
                ));
            }
        }
    }
    Ok((cases, None))
}

fn check_two_efficiency(ev: &Evaluator, games: &[Game]) -> Result<AxiomOutcome, GameError> {
    let mut cases = 0;
    for g in games {
        let phi = ev.rebates(g)?;
        for i in 1..=g.n() {
            cases += 1;
            let ext = extend(g, i, SybilFamily::Copy, 1)?;
            let rebates = ev.rebates(ext.extended())?;
            let pair = rebates.payment(i) + rebates.payment(g.n() + 1);
            if (pair - phi.payment(i)).abs() > ABS_TOL {
                return Ok((
                    cases,
                    Some(AuditWitness {
                        description: format!(
                            "player {i} plus one copy receive {pair}, the original received {}",
                            phi.payment(i)
                        ),
                        game: g.clone(),
                        other_game: Some(ext.extended().clone()),
                        players: vec![i, g.n() + 1],
                        observed: pair,
                        bound: phi.payment(i),
                    }),
                ));
            }
        }
    }
    Ok((cases, None))
}

fn check_no_deficit(ev: &Evaluator, games: &[Game]) -> Result<AxiomOutcome, GameError> {
    let mut cases = 0;
    for g in games {
        cases += 1;
        let welfare = ev.rebates(g)?.welfare();
        if welfare > g.grand_value() + ABS_TOL {
            return Ok((
                cases,
                Some(AuditWitness {
                    description: format!(
                        "payments sum to {welfare} > v(N) = {}",
                        g.grand_value()
                    ),
                    game: g.clone(),
                    other_game: None,
                    players: vec![],
                    observed: welfare,
                    bound: g.grand_value(),
                }),
            ));
        }
    }
    Ok((cases, None))
}

fn check_collusion_proof(ev: &Evaluator, games: &[Game]) -> Result<AxiomOutcome, GameError> {
    let mut cases = 0;
    for g in games {
        let phi = ev.rebates(g)?;
        for s_set in 1..(1u64 << g.n()) as Coalition {
            if s_set.count_ones() < 2 {
                continue;
            }
            cases += 1;
            let merged = collusion_game(g, s_set)?;
            let separate: f64 = members(s_set).map(|i| phi.payment(i)).sum();
            let merged_payment = ev.rebates(merged.game())?.payment(merged.merged_player());
            if separate < merged_payment - ABS_TOL {
                return Ok((
                    cases,
                    Some(AuditWitness {
                        description: format!(
                            "players {} receive {separate} apart but {merged_payment} as one identity",
                            coalition_string(s_set)
                        ),
                        game: g.clone(),
                        other_game: Some(merged.game().clone()),
                        players: members(s_set).collect(),
                        observed: separate,
                        bound: merged_payment,
                    }),
                ));
            }
        }
    }
    Ok((cases, None))
}

/// Default separability constant: `psi_bar` is designed to be
/// `1/(1 + n/2^{n-1})`-separable, `theta` is 1-separable by definition.
fn default_alpha(operator: OperatorId, n: usize) -> f64 {
    match operator {
        OperatorId::PsiBar => 1.0 / (1.0 + n as f64 / 2f64.powi(n as i32 - 1)),
        _ => 1.0,
    }
}

fn check_alpha_separable(
    ev: &Evaluator,
    games: &[Game],
    alpha_override: Option<f64>,
) -> Result<AxiomOutcome, GameError> {
    let mut cases = 0;
    for g in games {
        let phi = ev.rebates(g)?;
        let theta = crate::ops::values::theta(g)?;
        let alpha = alpha_override.unwrap_or_else(|| default_alpha(ev.operator, g.n()));
        for i in 1..=g.n() {
            cases += 1;
            let floor = alpha * theta.payment(i);
            if phi.payment(i) < floor - ABS_TOL {
                return Ok((
                    cases,
                    Some(AuditWitness {
                        description: format!(
                            "player {i} receives {} < alpha*theta = {floor} (alpha = {alpha})",
                            phi.payment(i)
                        ),
                        game: g.clone(),
                        other_game: None,
                        players: vec![i],
                        observed: phi.payment(i),
                        bound: floor,
                    }),
                ));
            }
        }
    }
    Ok((cases, None))
}

fn check_spo(ev: &Evaluator, unanimity: &[Game]) -> Result<AxiomOutcome, GameError> {
    let mut cases = 0;
    for g in unanimity {
        let (_, r) = g.profile().unanimity_scaled.expect("basis games are unanimity");
        let phi = ev.rebates(g)?;
        let inside = 1.0 / 2f64.powi(r.count_ones() as i32 - 1);
        for i in 1..=g.n() {
            cases += 1;
            let want = if r & player_bit(i) != 0 { inside } else { 0.0 };
            if (phi.payment(i) - want).abs() > ABS_TOL {
                return Ok((
                    cases,
                    Some(AuditWitness {
                        description: format!(
                            "on the unanimity game over {} player {i} receives {}, optimum is {want}",
                            coalition_string(r),
                            phi.payment(i)
                        ),
                        game: g.clone(),
                        other_game: None,
                        players: vec![i],
                        observed: phi.payment(i),
                        bound: want,
                    }),
                ));
            }
        }
    }
    Ok((cases, None))
}

/// One row of the trilemma demonstration: does the operator keep symmetry,
/// collusion-proofness, and general Sybil-proofness on the sample?
#[derive(Clone, Debug, Serialize)]
pub struct TrilemmaRow {
    pub operator: String,
    pub symmetric: bool,
    pub collusion_proof: bool,
    pub general_sybil_proof: bool,
    pub failed: Vec<&'static str>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrilemmaReport {
    pub rows: Vec<TrilemmaRow>,
}

impl TrilemmaReport {
    pub fn no_operator_passes_all(&self) -> bool {
        self.rows.iter().all(|r| !r.failed.is_empty())
    }
}

/// Runs the S / CP / GSP audits for every built-in operator and reports
/// which of the three each one loses. No operator can keep all three.
pub fn trilemma_demo(search: &SearchConfig) -> Result<TrilemmaReport, GameError> {
    let axioms = [AxiomId::Symmetry, AxiomId::CollusionProof, AxiomId::GeneralSybilProof];
    let mut rows = Vec::new();
    for op in [OperatorId::Shapley, OperatorId::Banzhaf, OperatorId::Theta, OperatorId::PsiBar] {
        // The search-based operator gets a reduced sample; the closed-form
        // ones are cheap enough for the full one.
        let cfg = match op {
            OperatorId::PsiBar => SampleConfig::light(),
            _ => SampleConfig::default(),
        };
        let audits = audit(op, &axioms, &cfg, search)?;
        let status = |axiom: AxiomId| audits.iter().find(|a| a.axiom == axiom).unwrap().passed;
        let symmetric = status(AxiomId::Symmetry);
        let collusion_proof = status(AxiomId::CollusionProof);
        let general_sybil_proof = status(AxiomId::GeneralSybilProof);
        let mut failed = Vec::new();
        if !symmetric {
            failed.push("S");
        }
        if !collusion_proof {
            failed.push("CP");
        }
        if !general_sybil_proof {
            failed.push("GSP");
        }
        rows.push(TrilemmaRow {
            operator: op.name().into(),
            symmetric,
            collusion_proof,
            general_sybil_proof,
            failed,
        });
    }
    let report = TrilemmaReport { rows };
    assert!(
        report.no_operator_passes_all(),
        "an operator kept symmetry, collusion-proofness and general Sybil-proofness at once"
    );
    Ok(report)
}

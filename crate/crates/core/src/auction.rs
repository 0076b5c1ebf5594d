//! The block-space auction model: bundles with private binary valuations, a
//! downward-closed feasible family, an MEV oracle over bundle sets, and
//! truthful mechanisms paying exact threshold payments.
//!
//! Two mechanisms share the machinery: the welfare mechanism allocates
//! `argmax Σ b_i` and the MEV-maximizing mechanism `argmax Σ b_i + v(S)`.
//! Winners pay the infimum bid that keeps them allocated, clamped at zero.
//! A deliberately broken pay-your-bid variant exists as a control for the
//! truthfulness probe.

use crate::game::{members, player_bit, Coalition, Game, GameError, ABS_TOL, ENUM_PLAYER_CAP};
use crate::ops::psi::SearchConfig;
use crate::ops::OperatorId;
use crate::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuctionError {
    #[error("instance is inconsistent: {0} bids, oracle over {1} bundles")]
    SizeMismatch(usize, usize),
    #[error("bid for bundle {0} must be finite, got {1}")]
    BadBid(usize, f64),
    #[error("negative bid {1} for bundle {0}: mechanisms require nonnegative bids")]
    NegativeBid(usize, f64),
    #[error("bundle index {0} out of range ({1} bundles)")]
    BadBundle(usize, usize),
    #[error("give either conflicts or an explicit maximal family, not both")]
    AmbiguousFamily,
    #[error("bundle {0} is not a winner under this mechanism")]
    NotAWinner(usize),
    #[error("the rebate mechanism requires a conflict-free family")]
    NeedsFullFamily,
    #[error("operator {0} is not no-deficit; rebate mechanism takes theta, psi_bar or banzhaf_clamped")]
    UnsupportedOperator(String),
    #[error("auction supports at most {ENUM_PLAYER_CAP} bundles, got {0}")]
    TooManyBundles(usize),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// A downward-closed family of feasible bundle sets, represented either by
/// pairwise conflicts or by an explicit list of maximal feasible sets.
/// Both representations are downward closed by construction and always
/// contain the empty set.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibleFamily {
    n: usize,
    repr: FamilyRepr,
}

#[derive(Clone, Debug, PartialEq)]
enum FamilyRepr {
    Conflicts(Vec<(usize, usize)>),
    Maximal(Vec<Coalition>),
}

impl FeasibleFamily {
    /// No conflicts: every bundle set is feasible.
    pub fn full(n: usize) -> Self {
        FeasibleFamily { n, repr: FamilyRepr::Conflicts(Vec::new()) }
    }

    pub fn from_conflicts(n: usize, pairs: Vec<(usize, usize)>) -> Result<Self, AuctionError> {
        for &(i, j) in &pairs {
            for b in [i, j] {
                if b == 0 || b > n {
                    return Err(AuctionError::BadBundle(b, n));
                }
            }
        }
        Ok(FeasibleFamily { n, repr: FamilyRepr::Conflicts(pairs) })
    }

    /// Feasible sets are exactly the subsets of the listed maximal sets.
    pub fn from_maximal(n: usize, maximal: Vec<Coalition>) -> Result<Self, AuctionError> {
        let full = crate::game::full_mask(n);
        for &m in &maximal {
            if m & !full != 0 {
                let bad = members(m & !full).next().unwrap_or(n + 1);
                return Err(AuctionError::BadBundle(bad, n));
            }
        }
        Ok(FeasibleFamily { n, repr: FamilyRepr::Maximal(maximal) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, set: Coalition) -> bool {
        match &self.repr {
            FamilyRepr::Conflicts(pairs) => pairs
                .iter()
                .all(|&(i, j)| set & (player_bit(i) | player_bit(j)) != player_bit(i) | player_bit(j)),
            FamilyRepr::Maximal(maximal) => {
                set == 0 || maximal.iter().any(|&m| set & !m == 0)
            }
        }
    }

    pub fn is_full(&self) -> bool {
        self.contains(crate::game::full_mask(self.n))
    }

    /// All feasible sets, ascending by mask.
    pub fn iter_feasible(&self) -> impl Iterator<Item = Coalition> + '_ {
        (0..1u64 << self.n).map(|m| m as Coalition).filter(|&m| self.contains(m))
    }

    /// Exhaustive downward-closure check, used by the tests (cheap for
    /// n <= 16).
    pub fn downward_closed(&self) -> bool {
        self.contains(0)
            && self.iter_feasible().all(|s| {
                members(s).all(|i| self.contains(s & !player_bit(i)))
            })
    }
}

/// Bids, a feasible family, the MEV oracle over bundle sets, and a seed for
/// reproducible tie-breaking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceWire", into = "InstanceWire")]
pub struct AuctionInstance {
    pub bids: Vec<f64>,
    pub family: FeasibleFamily,
    pub oracle: Game,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct InstanceWire {
    bids: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conflicts: Option<Vec<(usize, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    feasible_maximal: Option<Vec<Vec<usize>>>,
    oracle: Game,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<InstanceWire> for AuctionInstance {
    type Error = String;
    fn try_from(w: InstanceWire) -> Result<Self, String> {
        let n = w.bids.len();
        let family = match (w.conflicts, w.feasible_maximal) {
            (Some(_), Some(_)) => return Err(AuctionError::AmbiguousFamily.to_string()),
            (Some(pairs), None) => {
                FeasibleFamily::from_conflicts(n, pairs).map_err(|e| e.to_string())?
            }
            (None, Some(maximal)) => {
                let masks = maximal
                    .iter()
                    .map(|bundles| {
                        for &b in bundles {
                            if b == 0 || b > n {
                                return Err(AuctionError::BadBundle(b, n).to_string());
                            }
                        }
                        Ok(crate::game::coalition_of(bundles))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                FeasibleFamily::from_maximal(n, masks).map_err(|e| e.to_string())?
            }
            (None, None) => FeasibleFamily::full(n),
        };
        AuctionInstance::new(w.bids, family, w.oracle, w.seed).map_err(|e| e.to_string())
    }
}

impl From<AuctionInstance> for InstanceWire {
    fn from(inst: AuctionInstance) -> InstanceWire {
        let (conflicts, feasible_maximal) = match &inst.family.repr {
            FamilyRepr::Conflicts(pairs) => (Some(pairs.clone()), None),
            FamilyRepr::Maximal(maximal) => (
                None,
                Some(maximal.iter().map(|&m| members(m).collect()).collect()),
            ),
        };
        InstanceWire {
            bids: inst.bids,
            conflicts,
            feasible_maximal,
            oracle: inst.oracle,
            seed: inst.seed,
        }
    }
}

impl AuctionInstance {
    pub fn new(
        bids: Vec<f64>,
        family: FeasibleFamily,
        oracle: Game,
        seed: u64,
    ) -> Result<Self, AuctionError> {
        let n = bids.len();
        if n > ENUM_PLAYER_CAP {
            return Err(AuctionError::TooManyBundles(n));
        }
        if oracle.n() != n || family.n() != n {
            return Err(AuctionError::SizeMismatch(n, oracle.n()));
        }
        for (i, &b) in bids.iter().enumerate() {
            if !b.is_finite() {
                return Err(AuctionError::BadBid(i + 1, b));
            }
        }
        Ok(AuctionInstance { bids, family, oracle, seed })
    }

    pub fn n(&self) -> usize {
        self.bids.len()
    }

    fn reject_negative_bids(&self) -> Result<(), AuctionError> {
        for (i, &b) in self.bids.iter().enumerate() {
            if b < 0.0 {
                return Err(AuctionError::NegativeBid(i + 1, b));
            }
        }
        Ok(())
    }

    fn with_bid(&self, bundle: usize, bid: f64) -> AuctionInstance {
        let mut copy = self.clone();
        copy.bids[bundle - 1] = bid;
        copy
    }
}

/// The mechanisms the module can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismId {
    /// Allocates `argmax Σ b_i`, threshold payments.
    Myerson,
    /// Allocates `argmax Σ b_i + v(S)`, threshold payments.
    MevMax,
    /// First-price control: same allocation as Myerson but winners pay
    /// their bid. Not truthful; exists to validate the probe.
    PayYourBid,
}

impl MechanismId {
    pub fn name(self) -> &'static str {
        match self {
            MechanismId::Myerson => "myerson",
            MechanismId::MevMax => "mev_max",
            MechanismId::PayYourBid => "pay_your_bid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "myerson" => Some(MechanismId::Myerson),
            "mev_max" | "mevmax" => Some(MechanismId::MevMax),
            "pay_your_bid" => Some(MechanismId::PayYourBid),
            _ => None,
        }
    }

    fn uses_oracle(self) -> bool {
        matches!(self, MechanismId::MevMax)
    }
}

/// Result of running a mechanism: the winning set, per-bundle payments
/// (negative = rebate paid to the user), and the accounting identities
/// `welfare = Σ_{i∈S*} (b_i − p_i)` and `revenue = v(S*) + Σ p_i` under
/// truthful bids. `builder_payment` totals the rebates actually paid out.
#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub allocation: Coalition,
    pub payments: Vec<f64>,
    pub welfare: f64,
    pub revenue: f64,
    pub builder_payment: f64,
    pub deficit: bool,
    pub tie_broken: bool,
}

fn objective(inst: &AuctionInstance, mech: MechanismId, set: Coalition) -> f64 {
    let bids: f64 = members(set).map(|i| inst.bids[i - 1]).sum();
    if mech.uses_oracle() {
        bids + inst.oracle.value(set)
    } else {
        bids
    }
}

fn argmax_allocation(inst: &AuctionInstance, mech: MechanismId) -> (Coalition, bool) {
    let mut best = f64::NEG_INFINITY;
    let mut ties: Vec<Coalition> = Vec::new();
    for set in inst.family.iter_feasible() {
        let value = objective(inst, mech, set);
        if value > best {
            best = value;
            ties.clear();
            ties.push(set);
        } else if value == best {
            ties.push(set);
        }
    }
    let tie_broken = ties.len() > 1;
    let winner = if tie_broken {
        let mut rng = ChaCha8Rng::seed_from_u64(inst.seed);
        ties[rng.random_range(0..ties.len())]
    } else {
        ties[0]
    };
    (winner, tie_broken)
}

/// Threshold of a winning bundle: `max(0, B − A)` with
/// `A = max_{S∋i} (objective(S) − b_i)` and `B = max_{S∌i} objective(S)`.
/// This equals the infimum nonnegative bid at which `i` stays allocated.
fn raw_threshold(inst: &AuctionInstance, mech: MechanismId, bundle: usize) -> f64 {
    let bit = player_bit(bundle);
    let mut with = f64::NEG_INFINITY;
    let mut without = f64::NEG_INFINITY;
    for set in inst.family.iter_feasible() {
        let value = objective(inst, mech, set);
        if set & bit != 0 {
            with = with.max(value - inst.bids[bundle - 1]);
        } else {
            without = without.max(value);
        }
    }
    without - with
}

fn run_mechanism(
    inst: &AuctionInstance,
    mech: MechanismId,
    clamp_payments: bool,
) -> Result<Outcome, AuctionError> {
    let (allocation, tie_broken) = argmax_allocation(inst, mech);
    let mut payments = vec![0.0; inst.n()];
    for i in members(allocation) {
        payments[i - 1] = match mech {
            MechanismId::PayYourBid => inst.bids[i - 1],
            _ => {
                let raw = raw_threshold(inst, mech, i);
                if clamp_payments {
                    raw.max(0.0)
                } else {
                    raw
                }
            }
        };
    }
    Ok(outcome_from(inst, allocation, payments, tie_broken))
}

fn outcome_from(
    inst: &AuctionInstance,
    allocation: Coalition,
    payments: Vec<f64>,
    tie_broken: bool,
) -> Outcome {
    let welfare: f64 = members(allocation)
        .map(|i| inst.bids[i - 1] - payments[i - 1])
        .sum();
    let collected: f64 = payments.iter().sum();
    let revenue = inst.oracle.value(allocation) + collected;
    let builder_payment: f64 = payments.iter().map(|p| p.max(0.0) - p).sum();
    Outcome {
        allocation,
        payments,
        welfare,
        revenue,
        builder_payment,
        deficit: revenue < -ABS_TOL,
        tie_broken,
    }
}

/// The welfare mechanism: allocate `argmax Σ b_i`, pay thresholds.
pub fn myerson_allocate(inst: &AuctionInstance) -> Result<Outcome, AuctionError> {
    inst.reject_negative_bids()?;
    run_mechanism(inst, MechanismId::Myerson, true)
}

/// The MEV-maximizing mechanism: allocate `argmax Σ b_i + v(S)`, pay
/// thresholds computed with the oracle term included.
pub fn mev_max_allocate(inst: &AuctionInstance) -> Result<Outcome, AuctionError> {
    inst.reject_negative_bids()?;
    run_mechanism(inst, MechanismId::MevMax, true)
}

pub fn allocate(inst: &AuctionInstance, mech: MechanismId) -> Result<Outcome, AuctionError> {
    inst.reject_negative_bids()?;
    run_mechanism(inst, mech, true)
}

/// Threshold payment of a winner, cross-checkable by bisection on the bid.
pub fn threshold_payment(
    inst: &AuctionInstance,
    mech: MechanismId,
    bundle: usize,
) -> Result<f64, AuctionError> {
    inst.oracle.check_player(bundle)?;
    let (allocation, _) = argmax_allocation(inst, mech);
    if allocation & player_bit(bundle) == 0 {
        return Err(AuctionError::NotAWinner(bundle));
    }
    Ok(raw_threshold(inst, mech, bundle).max(0.0))
}

/// The rebate mechanism for conflict-free bundle sets: allocate everything
/// and pay each bundle its operator rebate, `p_i = −τ_i(v)`. No-deficit
/// holds whenever the operator is.
pub fn tau_mechanism(
    inst: &AuctionInstance,
    operator: OperatorId,
    search: &SearchConfig,
) -> Result<Outcome, AuctionError> {
    if !matches!(
        operator,
        OperatorId::Theta | OperatorId::PsiBar | OperatorId::BanzhafClamped
    ) {
        return Err(AuctionError::UnsupportedOperator(operator.name().into()));
    }
    if !inst.family.is_full() {
        return Err(AuctionError::NeedsFullFamily);
    }
    inst.reject_negative_bids()?;
    let rebates = operator.rebates(&inst.oracle, search)?;
    let payments: Vec<f64> = rebates.iter().map(|t| -t).collect();
    Ok(outcome_from(inst, inst.oracle.full(), payments, false))
}

/// One found truthfulness violation, with everything needed to replay it.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeViolation {
    pub instance: AuctionInstance,
    pub bundle: usize,
    pub deviation_bid: f64,
    pub truthful_utility: f64,
    pub deviating_utility: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub mechanism: String,
    pub trials: usize,
    pub violations: usize,
    /// At most the first ten violations are retained as witnesses.
    pub witnesses: Vec<ProbeViolation>,
}

/// Random-deviation truthfulness probe: draws random instances (conflict
/// graphs up to 6 bundles, uniform valuations, random monotone oracles)
/// and one random unilateral deviation each, and checks that truthful
/// bidding never loses utility.
pub fn truthfulness_probe(
    mech: MechanismId,
    trials: usize,
    seed: u64,
) -> Result<ProbeReport, AuctionError> {
    let mut rng = sample::rng(seed);
    let mut violations = 0usize;
    let mut witnesses = Vec::new();

    for _ in 0..trials {
        let n = rng.random_range(2..=6);
        let bids: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 5.0).collect();
        let mut pairs = Vec::new();
        for i in 1..=n {
            for j in (i + 1)..=n {
                if rng.random::<f64>() < 0.3 {
                    pairs.push((i, j));
                }
            }
        }
        let oracle = sample::random_monotone_game(n, &mut rng)
            .scale(rng.random::<f64>() * 4.0)
            .expect("scaled monotone game is valid");
        let inst = AuctionInstance::new(
            bids.clone(),
            FeasibleFamily::from_conflicts(n, pairs)?,
            oracle,
            rng.random::<u64>(),
        )?;

        let truthful = run_mechanism(&inst, mech, true)?;
        let bundle = rng.random_range(1..=n);
        let deviation_bid = rng.random::<f64>() * 6.0;
        let deviated = run_mechanism(&inst.with_bid(bundle, deviation_bid), mech, true)?;

        let valuation = bids[bundle - 1];
        let utility = |out: &Outcome| {
            if out.allocation & player_bit(bundle) != 0 {
                valuation - out.payments[bundle - 1]
            } else {
                0.0
            }
        };
        let truthful_utility = utility(&truthful);
        let deviating_utility = utility(&deviated);
        if deviating_utility > truthful_utility + ABS_TOL {
            violations += 1;
            if witnesses.len() < 10 {
                witnesses.push(ProbeViolation {
                    instance: inst,
                    bundle,
                    deviation_bid,
                    truthful_utility,
                    deviating_utility,
                });
            }
        }
    }

    Ok(ProbeReport { mechanism: mech.name().into(), trials, violations, witnesses })
}

/// The conflicting-pair splitting scenario: two conflicting bundles with
/// bids `1` and `1 + epsilon`, each carrying MEV 10. The higher bidder wins
/// and pays the threshold 1. Splitting the winning bundle into two
/// complementary parts bidding `(1, 1)` still wins but drops both
/// thresholds to zero.
#[derive(Clone, Debug, Serialize)]
pub struct SybilSplitReport {
    pub epsilon: f64,
    pub pre: Outcome,
    pub post: Outcome,
    pub pre_payment: f64,
    pub post_payments: (f64, f64),
    pub pre_utility: f64,
    pub post_utility: f64,
    pub tie_flagged: bool,
}

pub fn sybil_split_scenario(epsilon: f64, seed: u64) -> Result<SybilSplitReport, AuctionError> {
    let mev = 10.0;
    let valuation = 1.0 + epsilon;

    let oracle = Game::new(2, vec![0.0, mev, mev, mev], true)?;
    let pre_inst = AuctionInstance::new(
        vec![1.0, valuation],
        FeasibleFamily::from_conflicts(2, vec![(1, 2)])?,
        oracle,
        seed,
    )?;
    let pre = myerson_allocate(&pre_inst)?;
    let pre_payment = pre.payments[1];
    let pre_utility = if pre.allocation & player_bit(2) != 0 {
        valuation - pre_payment
    } else {
        0.0
    };

    // Bundle 2 splits into complementary parts (bundles 2 and 3): each part
    // alone produces no MEV, together they reproduce the original bundle.
    let split_oracle = Game::new(
        3,
        vec![0.0, mev, 0.0, mev, 0.0, mev, mev, mev],
        true,
    )?;
    let post_inst = AuctionInstance::new(
        vec![1.0, 1.0, 1.0],
        FeasibleFamily::from_conflicts(3, vec![(1, 2), (1, 3)])?,
        split_oracle,
        seed,
    )?;
    let post = myerson_allocate(&post_inst)?;
    let post_payments = (post.payments[1], post.payments[2]);
    let parts = player_bit(2) | player_bit(3);
    let post_utility = if post.allocation & parts == parts {
        valuation - post_payments.0 - post_payments.1
    } else {
        0.0
    };

    Ok(SybilSplitReport {
        epsilon,
        tie_flagged: pre.tie_broken,
        pre,
        post,
        pre_payment,
        post_payments,
        pre_utility,
        post_utility,
    })
}

/// The complementary-pair impossibility: two free bundles jointly worth
/// `value` to the builder, each worthless alone. Any welfare-positive
/// allocation must take both, and threshold logic (payments toward the
/// players, unclamped) forces a rebate of `value` to each — a deficit of
/// exactly `value`. Refusing to allocate keeps the budget balanced at zero
/// welfare.
#[derive(Clone, Debug, Serialize)]
pub struct NegativeResultReport {
    pub value: f64,
    pub allocated: Outcome,
    pub deficit_magnitude: f64,
    pub empty_welfare: f64,
}

pub fn negative_result_scenario(value: f64) -> Result<NegativeResultReport, AuctionError> {
    assert!(value > 0.0, "complementarity value must be positive");
    let oracle = Game::new(2, vec![0.0, 0.0, 0.0, value], true)?;
    let inst =
        AuctionInstance::new(vec![0.0, 0.0], FeasibleFamily::full(2), oracle, 0)?;
    // Unclamped thresholds: the payment *to* each player is its marginal
    // threshold, as the cost-side argument requires.
    let allocated = run_mechanism(&inst, MechanismId::MevMax, false)?;
    let deficit_magnitude = -allocated.revenue;
    Ok(NegativeResultReport { value, allocated, deficit_magnitude, empty_welfare: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::coalition_of;

    fn zero_oracle(n: usize) -> Game {
        Game::zero(n)
    }

    fn conflict_pair_instance(bids: Vec<f64>, seed: u64) -> AuctionInstance {
        let n = bids.len();
        AuctionInstance::new(
            bids,
            FeasibleFamily::from_conflicts(n, vec![(1, 2)]).unwrap(),
            zero_oracle(n),
            seed,
        )
        .unwrap()
    }

    #[test]
    fn higher_bid_wins_and_pays_the_loser_bid() {
        let inst = conflict_pair_instance(vec![1.0, 1.25], 7);
        let out = myerson_allocate(&inst).unwrap();
        assert_eq!(out.allocation, player_bit(2));
        assert_eq!(out.payments, vec![0.0, 1.0]);
        assert!(!out.tie_broken);
        assert!((out.welfare - 0.25).abs() < 1e-12);
        assert!((out.revenue - 1.0).abs() < 1e-12);
        assert!(!out.deficit);
    }

    #[test]
    fn no_competition_means_zero_thresholds() {
        let inst = AuctionInstance::new(
            vec![2.0, 3.0, 0.5],
            FeasibleFamily::full(3),
            zero_oracle(3),
            0,
        )
        .unwrap();
        let out = myerson_allocate(&inst).unwrap();
        assert_eq!(out.allocation, coalition_of(&[1, 2, 3]));
        assert_eq!(out.payments, vec![0.0; 3]);
    }

    #[test]
    fn partial_conflict_thresholds() {
        // Bundles 1 and 2 conflict; 3 is free. Bids (3, 2, 5).
        let inst = AuctionInstance::new(
            vec![3.0, 2.0, 5.0],
            FeasibleFamily::from_conflicts(3, vec![(1, 2)]).unwrap(),
            zero_oracle(3),
            0,
        )
        .unwrap();
        let out = myerson_allocate(&inst).unwrap();
        assert_eq!(out.allocation, coalition_of(&[1, 3]));
        assert_eq!(out.payments, vec![2.0, 0.0, 0.0]);
        assert_eq!(threshold_payment(&inst, MechanismId::Myerson, 1).unwrap(), 2.0);
        assert!(matches!(
            threshold_payment(&inst, MechanismId::Myerson, 2),
            Err(AuctionError::NotAWinner(2))
        ));
    }

    #[test]
    fn mev_max_collapses_to_myerson_on_zero_oracle() {
        let inst = conflict_pair_instance(vec![1.5, 2.5], 99);
        let a = myerson_allocate(&inst).unwrap();
        let b = mev_max_allocate(&inst).unwrap();
        assert_eq!(a.allocation, b.allocation);
        assert_eq!(a.payments, b.payments);
    }

    #[test]
    fn mev_max_prefers_the_mev_heavy_bundle() {
        // Conflicting bundles, bids 3 < 4, MEV 3 on the low bidder only:
        // objective 3 + 3 > 4, so the low bidder wins and pays
        // max(0, 4 - 3) = 1, leaving it utility 2 > Myerson's 1.
        let oracle = Game::new(2, vec![0.0, 3.0, 0.0, 3.0], true).unwrap();
        let inst = AuctionInstance::new(
            vec![3.0, 4.0],
            FeasibleFamily::from_conflicts(2, vec![(1, 2)]).unwrap(),
            oracle,
            0,
        )
        .unwrap();
        let out = mev_max_allocate(&inst).unwrap();
        assert_eq!(out.allocation, player_bit(1));
        assert_eq!(out.payments[0], 1.0);

        let myerson = myerson_allocate(&inst).unwrap();
        assert_eq!(myerson.allocation, player_bit(2));
        let mev_user_welfare = 3.0 - out.payments[0];
        let myerson_user_welfare = 4.0 - myerson.payments[1];
        assert!(mev_user_welfare > myerson_user_welfare);
    }

    #[test]
    fn myerson_can_beat_mev_max_on_user_welfare() {
        // High bid with no MEV vs low bid with large MEV.
        let oracle = Game::new(2, vec![0.0, 0.0, 10.0, 10.0], true).unwrap();
        let inst = AuctionInstance::new(
            vec![3.0, 1.0],
            FeasibleFamily::from_conflicts(2, vec![(1, 2)]).unwrap(),
            oracle,
            0,
        )
        .unwrap();
        let myerson = myerson_allocate(&inst).unwrap();
        let mev = mev_max_allocate(&inst).unwrap();
        assert_eq!(myerson.allocation, player_bit(1));
        assert_eq!(mev.allocation, player_bit(2));
        assert!(myerson.welfare > mev.welfare);
    }

    #[test]
    fn complementary_pair_forces_a_deficit() {
        let oracle = Game::new(2, vec![0.0, 0.0, 0.0, 1.0], true).unwrap();
        let inst =
            AuctionInstance::new(vec![0.0, 0.0], FeasibleFamily::full(2), oracle, 0).unwrap();
        let out = run_mechanism(&inst, MechanismId::MevMax, false).unwrap();
        assert_eq!(out.allocation, 0b11);
        assert_eq!(out.payments, vec![-1.0, -1.0]);
        assert!(out.deficit);
        assert!((out.builder_payment - 2.0).abs() < 1e-12);
        assert!((out.revenue + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_are_seed_deterministic() {
        let a = myerson_allocate(&conflict_pair_instance(vec![1.0, 1.0], 5)).unwrap();
        let b = myerson_allocate(&conflict_pair_instance(vec![1.0, 1.0], 5)).unwrap();
        assert!(a.tie_broken);
        assert_eq!(a.allocation, b.allocation);
    }

    #[test]
    fn family_representations() {
        let conflicts = FeasibleFamily::from_conflicts(3, vec![(1, 2)]).unwrap();
        assert!(conflicts.downward_closed());
        assert!(conflicts.contains(coalition_of(&[1, 3])));
        assert!(!conflicts.contains(coalition_of(&[1, 2])));
        assert!(!conflicts.is_full());

        let maximal =
            FeasibleFamily::from_maximal(3, vec![coalition_of(&[1, 3]), coalition_of(&[2, 3])])
                .unwrap();
        assert!(maximal.downward_closed());
        assert!(maximal.contains(coalition_of(&[3])));
        assert!(maximal.contains(0));
        assert!(!maximal.contains(coalition_of(&[1, 2])));
        assert_eq!(maximal.iter_feasible().count(), 6);
    }

    #[test]
    fn raising_a_winner_bid_keeps_it_winning() {
        let mut rng = crate::sample::rng(12);
        for _ in 0..40 {
            let n = rng.random_range(2..=5);
            let bids: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0).collect();
            let mut pairs = Vec::new();
            for i in 1..=n {
                for j in (i + 1)..=n {
                    if rng.random::<f64>() < 0.4 {
                        pairs.push((i, j));
                    }
                }
            }
            let inst = AuctionInstance::new(
                bids,
                FeasibleFamily::from_conflicts(n, pairs).unwrap(),
                crate::sample::random_monotone_game(n, &mut rng),
                rng.random(),
            )
            .unwrap();
            for mech in [MechanismId::Myerson, MechanismId::MevMax] {
                let out = run_mechanism(&inst, mech, true).unwrap();
                for i in members(out.allocation) {
                    for raise in [0.1, 1.0, 7.5] {
                        let higher = inst.with_bid(i, inst.bids[i - 1] + raise);
                        let out2 = run_mechanism(&higher, mech, true).unwrap();
                        assert!(
                            out2.allocation & player_bit(i) != 0,
                            "winner {i} lost after raising by {raise}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn winners_never_pay_more_than_their_bid() {
        let mut rng = crate::sample::rng(34);
        for _ in 0..60 {
            let n = rng.random_range(2..=5);
            let bids: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0).collect();
            let inst = AuctionInstance::new(
                bids,
                FeasibleFamily::from_conflicts(
                    n,
                    (1..n).map(|i| (i, i + 1)).collect(),
                )
                .unwrap(),
                crate::sample::random_monotone_game(n, &mut rng),
                rng.random(),
            )
            .unwrap();
            for mech in [MechanismId::Myerson, MechanismId::MevMax] {
                let out = run_mechanism(&inst, mech, true).unwrap();
                for i in members(out.allocation) {
                    assert!(out.payments[i - 1] <= inst.bids[i - 1] + 1e-9);
                    assert!(out.payments[i - 1] >= 0.0);
                }
            }
        }
    }

    #[test]
    fn probe_finds_no_violations_for_truthful_mechanisms() {
        for mech in [MechanismId::Myerson, MechanismId::MevMax] {
            let report = truthfulness_probe(mech, 300, 2024).unwrap();
            assert_eq!(report.violations, 0, "{:?}", report.witnesses.first());
        }
    }

    #[test]
    fn probe_catches_the_pay_your_bid_control() {
        let report = truthfulness_probe(MechanismId::PayYourBid, 300, 2024).unwrap();
        assert!(report.violations > 0);
        let w = &report.witnesses[0];
        assert!(w.deviating_utility > w.truthful_utility);
    }

    #[test]
    fn tau_mechanism_rebates_and_stays_solvent() {
        let g = crate::sample::deficit_example();
        let inst = AuctionInstance::new(
            vec![0.0, 0.0, 0.0],
            FeasibleFamily::full(3),
            g.clone(),
            0,
        )
        .unwrap();
        let search = SearchConfig::with_k_max(2);
        for op in [OperatorId::Theta, OperatorId::PsiBar, OperatorId::BanzhafClamped] {
            let out = tau_mechanism(&inst, op, &search).unwrap();
            assert_eq!(out.allocation, g.full());
            assert!(out.payments.iter().all(|&p| p <= 0.0));
            assert!(!out.deficit, "{op:?} ran a deficit");
            assert!(out.revenue >= -1e-9);
        }

        // Theta on an additive oracle rebates exactly the singleton worths.
        let additive = Game::additive(&[1.0, 2.0]).unwrap();
        let inst =
            AuctionInstance::new(vec![0.0, 0.0], FeasibleFamily::full(2), additive, 0).unwrap();
        let out = tau_mechanism(&inst, OperatorId::Theta, &search).unwrap();
        assert_eq!(out.payments, vec![-1.0, -2.0]);
        assert!((out.revenue - 0.0).abs() < 1e-12);

        // Zero oracle pays nothing.
        let inst = AuctionInstance::new(
            vec![0.0, 0.0],
            FeasibleFamily::full(2),
            Game::zero(2),
            0,
        )
        .unwrap();
        let out = tau_mechanism(&inst, OperatorId::Theta, &search).unwrap();
        assert_eq!(out.payments, vec![0.0, 0.0]);
    }

    #[test]
    fn tau_mechanism_guards() {
        let inst = conflict_pair_instance(vec![0.0, 0.0], 0);
        let search = SearchConfig::default();
        assert!(matches!(
            tau_mechanism(&inst, OperatorId::Theta, &search),
            Err(AuctionError::NeedsFullFamily)
        ));
        let full = AuctionInstance::new(
            vec![0.0, 0.0],
            FeasibleFamily::full(2),
            Game::zero(2),
            0,
        )
        .unwrap();
        assert!(matches!(
            tau_mechanism(&full, OperatorId::Banzhaf, &search),
            Err(AuctionError::UnsupportedOperator(_))
        ));
    }

    #[test]
    fn split_scenario_reproduces_the_payment_collapse() {
        let report = sybil_split_scenario(0.1, 42).unwrap();
        assert_eq!(report.pre_payment, 1.0);
        assert!((report.pre_utility - 0.1).abs() < 1e-12);
        assert_eq!(report.post_payments, (0.0, 0.0));
        assert!((report.post_utility - 1.1).abs() < 1e-12);
        assert!(!report.tie_flagged);

        let tied = sybil_split_scenario(0.0, 7).unwrap();
        assert!(tied.tie_flagged);
    }

    #[test]
    fn negative_result_scenario_deficit_scales() {
        let unit = negative_result_scenario(1.0).unwrap();
        assert!((unit.deficit_magnitude - 1.0).abs() < 1e-12);
        assert!(unit.allocated.deficit);
        assert_eq!(unit.empty_welfare, 0.0);

        let ten = negative_result_scenario(10.0).unwrap();
        assert!((ten.deficit_magnitude - 10.0).abs() < 1e-12);
    }

    #[test]
    fn mechanism_rejects_negative_bids() {
        let inst = conflict_pair_instance(vec![-1.0, 2.0], 0);
        assert!(matches!(
            myerson_allocate(&inst),
            Err(AuctionError::NegativeBid(1, _))
        ));
    }

    #[test]
    fn instance_json_round_trip() {
        let json = r#"{
            "bids": [1.0, 1.25],
            "conflicts": [[1, 2]],
            "oracle": {"n": 2, "values": [0, 10, 10, 10], "monotone": true},
            "seed": 42
        }"#;
        let inst: AuctionInstance = serde_json::from_str(json).unwrap();
        assert_eq!(inst.seed, 42);
        assert!(!inst.family.is_full());
        let out = serde_json::to_string(&inst).unwrap();
        let back: AuctionInstance = serde_json::from_str(&out).unwrap();
        assert_eq!(back, inst);

        let bad = r#"{
            "bids": [1.0],
            "conflicts": [[1, 2]],
            "feasible_maximal": [[1]],
            "oracle": {"n": 1, "values": [0, 1]},
            "seed": 0
        }"#;
        assert!(serde_json::from_str::<AuctionInstance>(bad).is_err());
    }
}

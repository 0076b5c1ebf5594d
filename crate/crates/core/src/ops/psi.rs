//! The approx-max-min operator `psi` and its separable normalization
//! `psi_bar`.
//!
//! `psi_i(v) = 2^{-(n-1)} sup { Σ_{j∈identities(i)} φ_j(v̄) }` over Sybil
//! extensions `v̄` of `v`. The supremum is not computable as stated, so the
//! reported payment is a certified-from-below estimate:
//!
//! 1. exhaustive copy/split/mixed extension chains up to `k_max` added
//!    identities (breadth-first, deduplicated, capped at `node_cap` games);
//! 2. an extrapolated limit of the pure-copy payoff sequence when that
//!    sequence is strictly increasing (clamped to `v(N)`);
//! 3. the exact value `c / 2^{n-1}` when the game is a scaled unanimity
//!    game, where the supremum is attained in the limit.
//!
//! Every report also carries the universal upper bound `v(N) / 2^{n-1}`.

use crate::game::{members, player_bit, Coalition, Game, GameError, RebateVector, ENUM_PLAYER_CAP};
use crate::ops::values::{shapley, theta};
use crate::ops::{fingerprint, OperatorReport, PlayerBounds};
use crate::sybil::{extend, extend_once, SybilFamily};
use std::collections::{HashSet, VecDeque};

/// Budget for the extension-chain search behind `psi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    /// Maximum total identities added along a chain.
    pub k_max: usize,
    /// Maximum number of extension games scored per (game, player) search.
    pub node_cap: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { k_max: 6, node_cap: 4000 }
    }
}

impl SearchConfig {
    pub fn with_k_max(k_max: usize) -> Self {
        SearchConfig { k_max, ..Default::default() }
    }
}

fn check_search_cap(game: &Game, search: &SearchConfig) -> Result<(), GameError> {
    let reach = game.n() + search.k_max;
    if reach > ENUM_PLAYER_CAP {
        return Err(GameError::EnumCapExceeded { n: reach, cap: ENUM_PLAYER_CAP });
    }
    Ok(())
}

/// `psi` payments plus per-player (lower, upper) bounds.
pub fn psi(game: &Game, search: &SearchConfig) -> Result<OperatorReport, GameError> {
    check_search_cap(game, search)?;
    let n = game.n();
    let denom = 2f64.powi(n as i32 - 1);
    let upper = game.grand_value() / denom;
    let profile = game.profile();

    let mut payments = Vec::with_capacity(n);
    let mut bounds = Vec::with_capacity(n);
    for i in 1..=n {
        let sup = match profile.unanimity_scaled {
            // The copy sequence on c·w_R attains c in the limit, so the
            // supremum is exact here.
            Some((c, r)) => {
                if r & player_bit(i) != 0 {
                    c
                } else {
                    0.0
                }
            }
            None => {
                let chain_best = chain_attack_supremum(game, i, search)?;
                let copy_seq = copy_payoff_sequence(game, i, search.k_max)?;
                let extrapolated = increasing_sequence_limit(&copy_seq)
                    .map(|est| est.min(game.grand_value()))
                    .unwrap_or(0.0);
                chain_best.max(extrapolated)
            }
        };
        let lower = (sup / denom).clamp(0.0, upper);
        payments.push(lower);
        bounds.push(PlayerBounds { lower, upper, gap: upper - lower });
    }

    let payments = RebateVector(payments);
    Ok(OperatorReport {
        operator: "psi".into(),
        welfare: payments.welfare(),
        payments,
        bounds: Some(bounds),
    })
}

/// `psi_bar_i = max(psi_i, theta_i) / (1 + n / 2^{n-1})`; no-deficit by
/// construction and `(1/(1+n/2^{n-1}))`-separable.
pub fn psi_bar(game: &Game, search: &SearchConfig) -> Result<OperatorReport, GameError> {
    let psi_report = psi(game, search)?;
    let theta = theta(game)?;
    let n = game.n();
    let divisor = 1.0 + n as f64 / 2f64.powi(n as i32 - 1);

    let psi_bounds = psi_report.bounds.as_ref().expect("psi always reports bounds");
    let mut payments = Vec::with_capacity(n);
    let mut bounds = Vec::with_capacity(n);
    for i in 1..=n {
        let lo = psi_report.payments.payment(i).max(theta.payment(i)) / divisor;
        let hi = psi_bounds[i - 1].upper.max(theta.payment(i)) / divisor;
        payments.push(lo);
        bounds.push(PlayerBounds { lower: lo, upper: hi, gap: hi - lo });
    }

    let payments = RebateVector(payments);
    Ok(OperatorReport {
        operator: "psi_bar".into(),
        welfare: payments.welfare(),
        payments,
        bounds: Some(bounds),
    })
}

/// Attacker-aggregated Shapley payoff over every copy/split chain of up to
/// `k_max` added identities, starting from `player`. Breadth-first so that
/// enlarging the budget can only extend, never reorder, the explored prefix.
pub fn chain_attack_supremum(
    game: &Game,
    player: usize,
    search: &SearchConfig,
) -> Result<f64, GameError> {
    game.check_player(player)?;
    let mut best = shapley(game)?.payment(player);

    let mut visited: HashSet<(Coalition, u128)> = HashSet::new();
    let mut queue: VecDeque<(Game, Coalition, usize)> = VecDeque::new();
    let root_mask = player_bit(player);
    visited.insert((root_mask, fingerprint(game.values())));
    queue.push_back((game.clone(), root_mask, 0));
    let mut scored = 1usize;

    while let Some((current, attacker, depth)) = queue.pop_front() {
        if depth == search.k_max {
            continue;
        }
        for family in [SybilFamily::Copy, SybilFamily::Split] {
            for target in members(attacker) {
                if scored >= search.node_cap {
                    return Ok(best);
                }
                let child = extend_once(&current, target, family)?;
                let child_attacker = attacker | player_bit(child.n());
                let key = (child_attacker, fingerprint(child.values()));
                if !visited.insert(key) {
                    continue;
                }
                scored += 1;
                let phi = shapley(&child)?;
                let payoff: f64 = members(child_attacker).map(|j| phi.payment(j)).sum();
                if payoff > best {
                    best = payoff;
                }
                queue.push_back((child, child_attacker, depth + 1));
            }
        }
    }
    Ok(best)
}

/// Attacker-aggregated Shapley payoff of the pure copy extension, for
/// `k = 0..=k_max` added identities.
pub fn copy_payoff_sequence(
    game: &Game,
    player: usize,
    k_max: usize,
) -> Result<Vec<f64>, GameError> {
    let mut seq = vec![shapley(game)?.payment(player)];
    for k in 1..=k_max {
        let ext = extend(game, player, SybilFamily::Copy, k)?;
        let phi = shapley(ext.extended())?;
        seq.push(phi.total_over(&ext.attacker_identities()));
    }
    Ok(seq)
}

/// Aitken extrapolation of a strictly increasing sequence; `None` when the
/// sequence is not strictly increasing or never contracts. Estimates from
/// each contracting triple are combined by max.
fn increasing_sequence_limit(seq: &[f64]) -> Option<f64> {
    if seq.len() < 3 || seq.windows(2).any(|w| w[1] <= w[0]) {
        return None;
    }
    let mut best: Option<f64> = None;
    for w in seq.windows(3) {
        let d1 = w[1] - w[0];
        let d2 = w[2] - w[1];
        if d2 < d1 && d1 - d2 > 1e-15 {
            let est = w[2] + d2 * d2 / (d1 - d2);
            best = Some(best.map_or(est, |b: f64| b.max(est)));
        }
    }
    best
}

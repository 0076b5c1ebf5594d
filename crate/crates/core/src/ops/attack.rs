//! Optimal Sybil strategy search: how much an attacker gains by reporting
//! extra identities to a given operator.

use crate::game::{members, player_bit, Coalition, Game, GameError};
use crate::ops::psi::SearchConfig;
use crate::ops::{fingerprint, OperatorId};
use crate::sybil::{extend, extend_once, SybilFamily};
use serde::{Deserialize, Serialize};
use std::collections::{HashSet, VecDeque};

/// Which extension chains the attack search explores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackFamily {
    Copy,
    Split,
    /// Arbitrary interleavings of copy and split steps.
    Mixed,
}

impl AttackFamily {
    pub fn name(self) -> &'static str {
        match self {
            AttackFamily::Copy => "copy",
            AttackFamily::Split => "split",
            AttackFamily::Mixed => "mixed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "copy" => Some(AttackFamily::Copy),
            "split" => Some(AttackFamily::Split),
            "mixed" => Some(AttackFamily::Mixed),
            _ => None,
        }
    }
}

/// Result of [`optimal_sybil_strategy`]: the attacker's aggregated payoff
/// for each number of added identities, the best count, and whether the
/// sequence is still strictly increasing at the budget edge (signalling a
/// supremum reached only as `k → ∞`).
#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub operator: String,
    pub player: usize,
    pub family: AttackFamily,
    /// `payoffs[k]` = aggregated payoff with `k` added identities;
    /// `payoffs[0]` is the honest payoff.
    pub payoffs: Vec<f64>,
    pub best_k: usize,
    pub best_payoff: f64,
    pub diverging: bool,
}

impl AttackReport {
    pub fn honest_payoff(&self) -> f64 {
        self.payoffs[0]
    }

    pub fn profitable(&self) -> bool {
        self.best_k > 0 && self.best_payoff > self.payoffs[0]
    }
}

/// Evaluates the attacker's aggregated payoff `Σ_{j∈{i}∪K} op_j(extension)`
/// for `k = 0..=k_max` added identities and reports the argmax (smallest
/// `k` on ties).
pub fn optimal_sybil_strategy(
    game: &Game,
    player: usize,
    operator: OperatorId,
    family: AttackFamily,
    k_max: usize,
    search: &SearchConfig,
) -> Result<AttackReport, GameError> {
    game.check_player(player)?;
    let honest = operator.rebates(game, search)?.payment(player);

    let mut payoffs = vec![honest];
    match family {
        AttackFamily::Copy | AttackFamily::Split => {
            let fam = match family {
                AttackFamily::Copy => SybilFamily::Copy,
                _ => SybilFamily::Split,
            };
            for k in 1..=k_max {
                let ext = extend(game, player, fam, k)?;
                let rebates = operator.rebates(ext.extended(), search)?;
                payoffs.push(rebates.total_over(&ext.attacker_identities()));
            }
        }
        AttackFamily::Mixed => {
            payoffs.extend(best_chain_payoffs(game, player, operator, k_max, search)?);
        }
    }

    let mut best_k = 0;
    for (k, &p) in payoffs.iter().enumerate() {
        if p > payoffs[best_k] {
            best_k = k;
        }
    }
    let diverging = k_max >= 1 && payoffs[k_max] > payoffs[k_max - 1];

    Ok(AttackReport {
        operator: operator.name().into(),
        player,
        family,
        best_payoff: payoffs[best_k],
        best_k,
        payoffs,
        diverging,
    })
}

/// Best aggregated payoff over mixed chains with exactly `k` added
/// identities, for `k = 1..=k_max`. Same breadth-first, deduplicated
/// traversal as the psi search, but scoring an arbitrary operator.
fn best_chain_payoffs(
    game: &Game,
    player: usize,
    operator: OperatorId,
    k_max: usize,
    search: &SearchConfig,
) -> Result<Vec<f64>, GameError> {
    let mut best = vec![f64::NEG_INFINITY; k_max];

    let mut visited: HashSet<(Coalition, u128)> = HashSet::new();
    let mut queue: VecDeque<(Game, Coalition, usize)> = VecDeque::new();
    queue.push_back((game.clone(), player_bit(player), 0));
    let mut scored = 1usize;

    'bfs: while let Some((current, attacker, depth)) = queue.pop_front() {
        if depth == k_max {
            continue;
        }
        for family in [SybilFamily::Copy, SybilFamily::Split] {
            for target in members(attacker) {
                if scored >= search.node_cap {
                    break 'bfs;
                }
                let child = extend_once(&current, target, family)?;
                let child_attacker = attacker | player_bit(child.n());
                if !visited.insert((child_attacker, fingerprint(child.values()))) {
                    continue;
                }
                scored += 1;
                let rebates = operator.rebates(&child, search)?;
                let payoff: f64 = members(child_attacker).map(|j| rebates.payment(j)).sum();
                if payoff > best[depth] {
                    best[depth] = payoff;
                }
                queue.push_back((child, child_attacker, depth + 1));
            }
        }
    }

    // A capped search can leave deep levels unscored; report them as the
    // deepest scored level so the series stays meaningful.
    let mut last = f64::NEG_INFINITY;
    for b in &mut best {
        if b.is_finite() {
            last = *b;
        } else {
            *b = last;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    fn search() -> SearchConfig {
        SearchConfig::with_k_max(3)
    }

    #[test]
    fn split_attack_on_unanimity_diverges_for_shapley() {
        // Splitting a member of w_R hands the attacker (k+1)/(|R|+k) of the
        // unit, strictly increasing in k with supremum 1.
        let g = Game::unanimity(3, 0b111).unwrap();
        let report =
            optimal_sybil_strategy(&g, 1, OperatorId::Shapley, AttackFamily::Split, 6, &search())
                .unwrap();
        assert!((report.honest_payoff() - 1.0 / 3.0).abs() < 1e-12);
        for (k, &p) in report.payoffs.iter().enumerate() {
            let expected = (k + 1) as f64 / (3 + k) as f64;
            assert!((p - expected).abs() < 1e-12, "k={k}");
        }
        assert!(report.diverging);
        assert_eq!(report.best_k, 6);
        assert!(report.profitable());
    }

    #[test]
    fn copy_attack_on_unanimity_dilutes_shapley() {
        // Literal copies substitute for each other, so the attacker's
        // aggregated Shapley payoff on w_R strictly decreases.
        let g = Game::unanimity(3, 0b111).unwrap();
        let report =
            optimal_sybil_strategy(&g, 1, OperatorId::Shapley, AttackFamily::Copy, 3, &search())
                .unwrap();
        assert_eq!(report.best_k, 0);
        assert!(!report.diverging);
        for pair in report.payoffs.windows(2) {
            assert!(pair[1] < pair[0]);
        }
    }

    #[test]
    fn banzhaf_is_never_attacked_profitably_on_monotone_games() {
        let mut rng = sample::rng(23);
        for n in 2..=4 {
            for _ in 0..10 {
                let g = sample::random_monotone_game(n, &mut rng);
                for i in 1..=n {
                    for family in [AttackFamily::Copy, AttackFamily::Split] {
                        let report = optimal_sybil_strategy(
                            &g,
                            i,
                            OperatorId::Banzhaf,
                            family,
                            3,
                            &search(),
                        )
                        .unwrap();
                        assert_eq!(report.best_k, 0, "game {g:?}, player {i}");
                        assert!(!report.profitable());
                    }
                }
            }
        }
    }

    #[test]
    fn copies_of_an_additive_player_change_nothing() {
        let g = Game::additive(&[2.0, 1.0]).unwrap();
        let report =
            optimal_sybil_strategy(&g, 1, OperatorId::Shapley, AttackFamily::Copy, 4, &search())
                .unwrap();
        for &p in &report.payoffs {
            assert!((p - 2.0).abs() < 1e-12);
        }
        assert_eq!(report.best_k, 0);
        assert!(!report.diverging);
    }

    #[test]
    fn mixed_chains_dominate_pure_families() {
        let mut rng = sample::rng(41);
        let g = sample::random_monotone_game(3, &mut rng);
        for i in 1..=3 {
            let mixed =
                optimal_sybil_strategy(&g, i, OperatorId::Shapley, AttackFamily::Mixed, 3, &search())
                    .unwrap();
            for family in [AttackFamily::Copy, AttackFamily::Split] {
                let pure =
                    optimal_sybil_strategy(&g, i, OperatorId::Shapley, family, 3, &search())
                        .unwrap();
                for k in 0..=3 {
                    assert!(
                        mixed.payoffs[k] >= pure.payoffs[k] - 1e-12,
                        "player {i}, family {family:?}, k={k}"
                    );
                }
            }
        }
    }
}

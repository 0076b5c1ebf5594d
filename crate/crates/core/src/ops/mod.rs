//! Value operators and the machinery to attack and audit them.

pub mod attack;
pub mod audit;
pub mod psi;
pub mod values;

pub use attack::{optimal_sybil_strategy, AttackFamily, AttackReport};
pub use audit::{audit, trilemma_demo, AxiomAudit, AxiomId, SampleConfig, TrilemmaReport};
pub use psi::{psi, psi_bar, SearchConfig};
pub use values::{
    banzhaf, banzhaf_welfare_formula, pro_rata, shapley, shapley_permutation_oracle, theta,
};

use crate::game::{Game, GameError, RebateVector};
use serde::{Deserialize, Serialize};

/// The built-in game operators, addressable by name from the CLI and audits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorId {
    Shapley,
    Banzhaf,
    /// Banzhaf payments uniformly rescaled onto the no-deficit budget when
    /// they would overshoot `v(N)`.
    BanzhafClamped,
    Theta,
    Psi,
    PsiBar,
}

impl OperatorId {
    pub const ALL: [OperatorId; 6] = [
        OperatorId::Shapley,
        OperatorId::Banzhaf,
        OperatorId::BanzhafClamped,
        OperatorId::Theta,
        OperatorId::Psi,
        OperatorId::PsiBar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorId::Shapley => "shapley",
            OperatorId::Banzhaf => "banzhaf",
            OperatorId::BanzhafClamped => "banzhaf_clamped",
            OperatorId::Theta => "theta",
            OperatorId::Psi => "psi",
            OperatorId::PsiBar => "psi_bar",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "shapley" => Some(OperatorId::Shapley),
            "banzhaf" => Some(OperatorId::Banzhaf),
            "banzhaf_clamped" => Some(OperatorId::BanzhafClamped),
            "theta" => Some(OperatorId::Theta),
            "psi" => Some(OperatorId::Psi),
            "psi_bar" | "psibar" => Some(OperatorId::PsiBar),
            _ => None,
        }
    }

    /// Per-identity payments of this operator on a game.
    pub fn rebates(self, game: &Game, search: &SearchConfig) -> Result<RebateVector, GameError> {
        match self {
            OperatorId::Shapley => values::shapley(game),
            OperatorId::Banzhaf => values::banzhaf(game),
            OperatorId::BanzhafClamped => {
                let beta = values::banzhaf(game)?;
                let total = beta.welfare();
                let budget = game.grand_value();
                if total > budget && total > 0.0 {
                    let scale = budget / total;
                    Ok(RebateVector(beta.iter().map(|p| p * scale).collect()))
                } else {
                    Ok(beta)
                }
            }
            OperatorId::Theta => values::theta(game),
            OperatorId::Psi => Ok(psi::psi(game, search)?.payments),
            OperatorId::PsiBar => Ok(psi::psi_bar(game, search)?.payments),
        }
    }

    /// Full report including bounds where the operator is approximated.
    pub fn report(self, game: &Game, search: &SearchConfig) -> Result<OperatorReport, GameError> {
        match self {
            OperatorId::Psi => psi::psi(game, search),
            OperatorId::PsiBar => psi::psi_bar(game, search),
            _ => {
                let payments = self.rebates(game, search)?;
                Ok(OperatorReport {
                    operator: self.name().into(),
                    welfare: payments.welfare(),
                    payments,
                    bounds: None,
                })
            }
        }
    }
}

/// Payments of one operator on one game; `welfare` is always the exact sum
/// of `payments`, and `bounds` is present for approximated operators.
#[derive(Clone, Debug, Serialize)]
pub struct OperatorReport {
    pub operator: String,
    pub payments: RebateVector,
    pub welfare: f64,
    pub bounds: Option<Vec<PlayerBounds>>,
}

/// Certified per-player bracket for an approximated operator.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PlayerBounds {
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
}

/// Exact content hash of a value table, used to deduplicate games during
/// searches and to memoize operator evaluations.
pub(crate) fn fingerprint(values: &[f64]) -> u128 {
    // Two independent FNV-1a style passes over the raw bit patterns.
    let mut a: u64 = 0xcbf29ce484222325;
    let mut b: u64 = 0x9e3779b97f4a7c15;
    for v in values {
        let bits = v.to_bits();
        a = (a ^ bits).wrapping_mul(0x100000001b3);
        b = (b ^ bits.rotate_left(17)).wrapping_mul(0xff51afd7ed558ccd);
    }
    ((a as u128) << 64) | b as u128
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    #[test]
    fn operator_names_round_trip() {
        for op in OperatorId::ALL {
            assert_eq!(OperatorId::parse(op.name()), Some(op));
        }
        assert_eq!(OperatorId::parse("PSI-BAR"), Some(OperatorId::PsiBar));
        assert_eq!(OperatorId::parse("nope"), None);
    }

    #[test]
    fn clamped_banzhaf_respects_the_budget() {
        let g = sample::deficit_example();
        let search = SearchConfig::default();
        let clamped = OperatorId::BanzhafClamped.rebates(&g, &search).unwrap();
        assert!((clamped.welfare() - 5.0).abs() < 1e-12);
        // Proportions preserved: 1.5 : 2.5 : 1.5 scaled by 5/5.5.
        assert!((clamped.payment(2) / clamped.payment(1) - 2.5 / 1.5).abs() < 1e-12);

        // No clamping when there is no deficit.
        let w = Game::unanimity(3, 0b111).unwrap();
        let b = OperatorId::Banzhaf.rebates(&w, &search).unwrap();
        let c = OperatorId::BanzhafClamped.rebates(&w, &search).unwrap();
        assert_eq!(b, c);
    }

    #[test]
    fn report_welfare_is_exact_sum() {
        let g = sample::deficit_example();
        let search = SearchConfig::with_k_max(2);
        for op in OperatorId::ALL {
            let report = op.report(&g, &search).unwrap();
            assert_eq!(report.welfare, report.payments.welfare());
        }
    }
}

//! The prior-optimal symmetric rebate linear program.
//!
//! With the player count drawn from a known prior `p_n` and full
//! complementarity (one unit of value to split, `R` normalized to 1), the
//! designer picks per-count welfare shares `W_n ∈ [0, 1]` maximizing
//! `Σ W_n p_n` subject to ex-ante Sybil-proofness: for every deviation
//! `y >= 2`,
//!
//! `Σ_n (W_n/n − W_{y+n−1} · y/(y+n−1)) p_n >= 0`.
//!
//! The program is truncated at `n_max` (the prior's support bound) and
//! `y_max`; out-of-range shares read as zero, so deviating into unreachable
//! counts pays nothing.

pub mod simplex;

use crate::game::ABS_TOL;
use serde::{Deserialize, Serialize};
use simplex::{maximize, DenseLp, LpError};
use std::collections::BTreeMap;
use thiserror::Error;

/// Cap on the truncation bound (LP dimension).
pub const MAX_SUPPORT: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PriorError {
    #[error("prior mass for count {0} must be finite and nonnegative, got {1}")]
    BadMass(usize, f64),
    #[error("prior masses must sum to 1, got {0}")]
    BadSum(f64),
    #[error("player counts must be between 1 and {MAX_SUPPORT}, got {0}")]
    BadCount(usize),
    #[error("prior has no support")]
    Empty,
    #[error("y_max must be at least 2, got {0}")]
    BadYMax(usize),
    #[error("internal solver failure: {0}")]
    Solver(#[from] LpError),
}

/// A prior over player counts, conditioned on at least one player.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorWire", into = "PriorWire")]
pub struct PriorModel {
    masses: BTreeMap<usize, f64>,
    n_max: usize,
    y_max: usize,
}

#[derive(Serialize, Deserialize)]
struct PriorWire {
    p: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y_max: Option<usize>,
}

impl TryFrom<PriorWire> for PriorModel {
    type Error = String;
    fn try_from(w: PriorWire) -> Result<Self, String> {
        let mut masses = BTreeMap::new();
        for (key, mass) in w.p {
            let n: usize = key.parse().map_err(|_| format!("bad player count {key:?}"))?;
            masses.insert(n, mass);
        }
        PriorModel::new(masses, w.y_max).map_err(|e| e.to_string())
    }
}

impl From<PriorModel> for PriorWire {
    fn from(m: PriorModel) -> PriorWire {
        PriorWire {
            p: m.masses.iter().map(|(n, p)| (n.to_string(), *p)).collect(),
            y_max: Some(m.y_max),
        }
    }
}

impl PriorModel {
    /// Validates masses (nonnegative, summing to 1) and fixes the
    /// truncation bounds. `y_max` defaults to `2 * n_max`.
    pub fn new(masses: BTreeMap<usize, f64>, y_max: Option<usize>) -> Result<Self, PriorError> {
        let masses: BTreeMap<usize, f64> =
            masses.into_iter().filter(|(_, p)| *p != 0.0).collect();
        if masses.is_empty() {
            return Err(PriorError::Empty);
        }
        for (&n, &p) in &masses {
            if n == 0 || n > MAX_SUPPORT {
                return Err(PriorError::BadCount(n));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(PriorError::BadMass(n, p));
            }
        }
        let total: f64 = masses.values().sum();
        if (total - 1.0).abs() > ABS_TOL {
            return Err(PriorError::BadSum(total));
        }
        let n_max = *masses.keys().last().expect("nonempty");
        let y_max = y_max.unwrap_or(2 * n_max).max(2);
        Ok(PriorModel { masses, n_max, y_max })
    }

    pub fn point_mass(n: usize) -> Result<Self, PriorError> {
        PriorModel::new([(n, 1.0)].into_iter().collect(), None)
    }

    pub fn mass(&self, n: usize) -> f64 {
        self.masses.get(&n).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.masses.iter().map(|(&n, &p)| (n, p))
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn y_max(&self) -> usize {
        self.y_max
    }

    /// Expected welfare of the prior-free optimal symmetric Sybil-proof
    /// policy `W_n = n / 2^{n-1}`.
    pub fn prior_free_welfare(&self) -> f64 {
        self.support().map(|(n, p)| p * prior_free_bound(n)).sum()
    }

    /// Ex-ante Sybil constraint value for deviation `y`; feasible policies
    /// keep this nonnegative for every `y >= 2`.
    pub fn constraint_value(&self, shares: &[f64], y: usize) -> f64 {
        self.support()
            .map(|(n, p)| {
                let stay = shares.get(n - 1).copied().unwrap_or(0.0) / n as f64;
                let deviate = shares
                    .get(y + n - 2)
                    .copied()
                    .unwrap_or(0.0)
                    * y as f64
                    / (y + n - 1) as f64;
                p * (stay - deviate)
            })
            .sum()
    }
}

/// Welfare bound `n / 2^{n-1}` of any symmetric Sybil-proof operator on the
/// full-complementarity game with `n` players.
pub fn prior_free_bound(n: usize) -> f64 {
    assert!(n >= 1, "player count must be positive");
    n as f64 / 2f64.powi(n as i32 - 1)
}

/// An optimal truncated policy: per-count welfare shares `W_n`, the implied
/// per-identity payments `X_n = W_n / n`, and the achieved objective.
#[derive(Clone, Debug, Serialize)]
pub struct RebatePolicy {
    pub welfare_shares: Vec<f64>,
    pub per_identity: Vec<f64>,
    pub expected_welfare: f64,
}

impl RebatePolicy {
    pub fn share(&self, n: usize) -> f64 {
        self.welfare_shares.get(n - 1).copied().unwrap_or(0.0)
    }
}

/// Solves the truncated prior-optimal LP with a deterministic dense
/// simplex. Among optimal vertices, ties are broken toward the
/// lexicographically largest share vector by a sequence of pinned re-solves.
pub fn solve_prior_optimal(prior: &PriorModel) -> Result<RebatePolicy, PriorError> {
    let n_vars = prior.n_max();
    let objective: Vec<f64> = (1..=n_vars).map(|n| prior.mass(n)).collect();

    let mut lp = DenseLp::new(objective.clone());
    for j in 0..n_vars {
        let mut row = vec![0.0; n_vars];
        row[j] = 1.0;
        lp.add_le(row, 1.0);
    }
    for y in 2..=prior.y_max() {
        let mut row = vec![0.0; n_vars];
        for (n, p) in prior.support() {
            row[n - 1] += p / n as f64;
            let idx = y + n - 1;
            if idx <= n_vars {
                row[idx - 1] -= p * y as f64 / idx as f64;
            }
        }
        lp.add_ge(row, 0.0);
    }

    // The zero policy satisfies every constraint, so the LP cannot be
    // infeasible; treat that as an internal failure.
    let base = maximize(&lp).map_err(|e| {
        debug_assert!(false, "W = 0 is feasible, solver said {e}");
        PriorError::Solver(e)
    })?;

    // Lexicographic refinement: pin the objective, then maximize each share
    // in turn. Slacks keep the previously optimal vertex feasible.
    const PIN_SLACK: f64 = 1e-10;
    let mut pinned = lp;
    pinned.add_ge(objective.clone(), base.objective - PIN_SLACK);
    let mut shares = base.x;
    for j in 0..n_vars {
        let mut unit = vec![0.0; n_vars];
        unit[j] = 1.0;
        pinned.objective = unit.clone();
        let refined = maximize(&pinned)?;
        shares = refined.x;
        pinned.add_ge(unit, refined.objective - PIN_SLACK);
    }

    // The pinned re-solves shave PIN_SLACK off saturated coordinates; snap
    // back onto the box where the drift is clearly artificial.
    let shares: Vec<f64> = shares
        .iter()
        .map(|&w| {
            let w = w.clamp(0.0, 1.0);
            if w > 1.0 - 1e-8 {
                1.0
            } else if w < 1e-8 {
                0.0
            } else {
                w
            }
        })
        .collect();
    let expected_welfare = objective.iter().zip(&shares).map(|(c, w)| c * w).sum();
    let per_identity = shares
        .iter()
        .enumerate()
        .map(|(j, w)| w / (j + 1) as f64)
        .collect();
    Ok(RebatePolicy { welfare_shares: shares, per_identity, expected_welfare })
}

/// Brute-force cross-check: maximizes the objective over a grid of feasible
/// share vectors (step `1/resolution`) spanning only the coordinates that
/// can matter. Independent of the simplex path.
pub fn grid_search_welfare(prior: &PriorModel, resolution: usize) -> f64 {
    let n_vars = prior.n_max();
    // Coordinates outside the support only ever relax constraints when
    // zero and never earn, so the grid fixes them at zero.
    let active: Vec<usize> = prior.support().map(|(n, _)| n - 1).collect();
    let mut shares = vec![0.0; n_vars];
    let mut best = 0.0f64;
    let mut stack = vec![0usize; active.len()];
    let mut level = 0usize;
    loop {
        if level == active.len() {
            let feasible =
                (2..=prior.y_max()).all(|y| prior.constraint_value(&shares, y) >= -1e-12);
            if feasible {
                let welfare: f64 =
                    prior.support().map(|(n, p)| p * shares[n - 1]).sum();
                if welfare > best {
                    best = welfare;
                }
            }
            level -= 1;
            loop {
                stack[level] += 1;
                if stack[level] <= resolution {
                    break;
                }
                stack[level] = 0;
                shares[active[level]] = 0.0;
                if level == 0 {
                    return best;
                }
                level -= 1;
            }
            shares[active[level]] = stack[level] as f64 / resolution as f64;
            level += 1;
            continue;
        }
        shares[active[level]] = stack[level] as f64 / resolution as f64;
        level += 1;
    }
}

/// One evaluated prior of a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub masses: Vec<f64>,
    pub optimal_welfare: f64,
    pub prior_free_welfare: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepTable {
    pub support: Vec<usize>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// CSV with header `p_<n>,...,optimal_welfare,prior_free_welfare`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for n in &self.support {
            out.push_str(&format!("p_{n},"));
        }
        out.push_str("optimal_welfare,prior_free_welfare\n");
        for row in &self.rows {
            for p in &row.masses {
                out.push_str(&format!("{p},"));
            }
            out.push_str(&format!("{},{}\n", row.optimal_welfare, row.prior_free_welfare));
        }
        out
    }
}

/// Solves the LP at every point of the probability-simplex lattice with
/// denominator `steps` over the given support counts, in lexicographic
/// order of the lattice coordinates.
pub fn sweep_priors(
    support: &[usize],
    steps: usize,
    y_max: Option<usize>,
) -> Result<SweepTable, PriorError> {
    if support.is_empty() {
        return Err(PriorError::Empty);
    }
    let mut rows = Vec::new();
    let mut point = vec![0usize; support.len()];
    enumerate_simplex(steps, support.len(), &mut point, 0, &mut |lattice| {
        let masses: BTreeMap<usize, f64> = support
            .iter()
            .zip(lattice)
            .filter(|(_, &k)| k > 0)
            .map(|(&n, &k)| (n, k as f64 / steps as f64))
            .collect();
        let prior = PriorModel::new(masses, y_max)?;
        let policy = solve_prior_optimal(&prior)?;
        rows.push(SweepRow {
            masses: lattice.iter().map(|&k| k as f64 / steps as f64).collect(),
            optimal_welfare: policy.expected_welfare,
            prior_free_welfare: prior.prior_free_welfare(),
        });
        Ok(())
    })?;
    Ok(SweepTable { support: support.to_vec(), rows })
}

fn enumerate_simplex<F: FnMut(&[usize]) -> Result<(), PriorError>>(
    total: usize,
    dims: usize,
    point: &mut Vec<usize>,
    level: usize,
    visit: &mut F,
) -> Result<(), PriorError> {
    if level == dims - 1 {
        point[level] = total - point[..level].iter().sum::<usize>();
        return visit(point);
    }
    let used: usize = point[..level].iter().sum();
    for k in 0..=(total - used) {
        point[level] = k;
        enumerate_simplex(total, dims, point, level + 1, visit)?;
    }
    Ok(())
}

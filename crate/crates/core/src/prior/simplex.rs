//! A small dense two-phase simplex for `max cᵀx s.t. Ax <= b, x >= 0`.
//!
//! Bland's rule everywhere (smallest eligible index enters, smallest basic
//! index leaves on ratio ties), so the method terminates on the degenerate,
//! zero-right-hand-side problems the rebate LP produces. Sized for a few
//! hundred rows and columns; everything is dense.

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
}

/// `max objective · x` subject to `row · x <= rhs` for every row and
/// `x >= 0`. Right-hand sides may be negative.
#[derive(Clone, Debug, Default)]
pub struct DenseLp {
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, f64)>,
}

impl DenseLp {
    pub fn new(objective: Vec<f64>) -> Self {
        DenseLp { objective, rows: Vec::new() }
    }

    pub fn add_le(&mut self, coefs: Vec<f64>, rhs: f64) {
        debug_assert_eq!(coefs.len(), self.objective.len());
        self.rows.push((coefs, rhs));
    }

    pub fn add_ge(&mut self, coefs: Vec<f64>, rhs: f64) {
        self.add_le(coefs.iter().map(|c| -c).collect(), -rhs);
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-9;

struct Tableau {
    /// Constraint matrix including slack and artificial columns.
    a: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Columns the simplex may pivot on (artificials are retired after
    /// phase one).
    allowed: Vec<bool>,
    n_structural: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let scale = self.a[row][col];
        for v in &mut self.a[row] {
            *v /= scale;
        }
        self.rhs[row] /= scale;
        for r in 0..self.a.len() {
            if r == row {
                continue;
            }
            let factor = self.a[r][col];
            if factor.abs() <= PIVOT_EPS {
                continue;
            }
            for c in 0..self.a[r].len() {
                self.a[r][c] -= factor * self.a[row][c];
            }
            self.rhs[r] -= factor * self.rhs[row];
            if self.rhs[r].abs() < PIVOT_EPS {
                self.rhs[r] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Bland-rule simplex on the given maximization costs. Returns the
    /// objective value.
    fn run(&mut self, costs: &[f64]) -> Result<f64, LpError> {
        // Reduced-cost row, priced out for the current basis.
        let ncols = self.a[0].len();
        let mut reduced = vec![0.0; ncols];
        reduced[..costs.len()].copy_from_slice(costs);
        let mut value = 0.0;
        for (row, &b) in self.basis.iter().enumerate() {
            let c = reduced[b];
            if c.abs() > 0.0 {
                for (r, a) in reduced.iter_mut().zip(&self.a[row]) {
                    *r -= c * a;
                }
                value += c * self.rhs[row];
            }
        }

        loop {
            // Entering: smallest allowed index with positive reduced cost.
            let Some(entering) = (0..ncols)
                .find(|&c| self.allowed[c] && reduced[c] > COST_EPS)
            else {
                return Ok(value);
            };

            // Leaving: minimum ratio, ties to the smallest basic variable.
            let mut leave: Option<(usize, f64)> = None;
            for row in 0..self.a.len() {
                let coef = self.a[row][entering];
                if coef > PIVOT_EPS {
                    let ratio = self.rhs[row] / coef;
                    let better = match leave {
                        None => true,
                        Some((best_row, best_ratio)) => {
                            ratio < best_ratio - PIVOT_EPS
                                || (ratio < best_ratio + PIVOT_EPS
                                    && self.basis[row] < self.basis[best_row])
                        }
                    };
                    if better {
                        leave = Some((row, ratio));
                    }
                }
            }
            let Some((leaving_row, _)) = leave else {
                return Err(LpError::Unbounded);
            };

            self.pivot(leaving_row, entering);
            // Re-price the reduced costs against the new basis row.
            let c = reduced[entering];
            if c.abs() > 0.0 {
                for (r, a) in reduced.iter_mut().zip(&self.a[leaving_row]) {
                    *r -= c * a;
                }
                value += c * self.rhs[leaving_row];
            }
        }
    }

    fn extract(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (row, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rhs[row];
            }
        }
        x
    }
}

/// Solves the LP, handling negative right-hand sides with a phase-one
/// artificial pass.
pub fn maximize(lp: &DenseLp) -> Result<LpSolution, LpError> {
    let n = lp.objective.len();
    let m = lp.rows.len();
    let artificial_rows: Vec<usize> = lp
        .rows
        .iter()
        .enumerate()
        .filter_map(|(i, (_, rhs))| (*rhs < 0.0).then_some(i))
        .collect();
    let n_art = artificial_rows.len();
    let ncols = n + m + n_art;

    let mut a = vec![vec![0.0; ncols]; m];
    let mut rhs = vec![0.0; m];
    let mut basis = vec![0usize; m];
    let mut art_index = 0usize;
    for (i, (coefs, b)) in lp.rows.iter().enumerate() {
        let flip = *b < 0.0;
        let sign = if flip { -1.0 } else { 1.0 };
        for (j, &c) in coefs.iter().enumerate() {
            a[i][j] = sign * c;
        }
        a[i][n + i] = sign; // slack
        rhs[i] = sign * b;
        if flip {
            let col = n + m + art_index;
            a[i][col] = 1.0;
            basis[i] = col;
            art_index += 1;
        } else {
            basis[i] = n + i;
        }
    }

    let mut tab = Tableau { a, rhs, basis, allowed: vec![true; ncols], n_structural: n };

    if n_art > 0 {
        // Phase one: drive Σ artificials to zero.
        let mut phase1 = vec![0.0; ncols];
        for cost in &mut phase1[n + m..] {
            *cost = -1.0;
        }
        let value = tab.run(&phase1)?;
        if value < -1e-7 {
            return Err(LpError::Infeasible);
        }
        // Retire artificial columns; pivot any still basic (at zero) onto a
        // real column, or drop the row as redundant.
        for col in n + m..ncols {
            tab.allowed[col] = false;
        }
        let mut row = 0;
        while row < tab.a.len() {
            if tab.basis[row] >= n + m {
                let swap = (0..n + m).find(|&c| tab.a[row][c].abs() > 1e-8);
                match swap {
                    Some(c) => tab.pivot(row, c),
                    None => {
                        tab.a.remove(row);
                        tab.rhs.remove(row);
                        tab.basis.remove(row);
                        continue;
                    }
                }
            }
            row += 1;
        }
    }

    let mut phase2 = vec![0.0; ncols];
    phase2[..n].copy_from_slice(&lp.objective);
    tab.run(&phase2)?;

    let x = tab.extract(tab.n_structural);
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { x, objective })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_solution(lp: &DenseLp, want_obj: f64, want_x: Option<&[f64]>) {
        let sol = maximize(lp).unwrap();
        assert!(
            (sol.objective - want_obj).abs() < 1e-8,
            "objective {} != {want_obj}",
            sol.objective
        );
        if let Some(x) = want_x {
            for (a, b) in sol.x.iter().zip(x) {
                assert!((a - b).abs() < 1e-8, "{:?} != {:?}", sol.x, x);
            }
        }
    }

    #[test]
    fn textbook_two_variable() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18.
        let mut lp = DenseLp::new(vec![3.0, 5.0]);
        lp.add_le(vec![1.0, 0.0], 4.0);
        lp.add_le(vec![0.0, 2.0], 12.0);
        lp.add_le(vec![3.0, 2.0], 18.0);
        assert_solution(&lp, 36.0, Some(&[2.0, 6.0]));
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = DenseLp::new(vec![1.0, 0.0]);
        lp.add_le(vec![0.0, 1.0], 5.0);
        assert_eq!(maximize(&lp).unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn infeasible_detected() {
        // x <= 1, x >= 2.
        let mut lp = DenseLp::new(vec![1.0]);
        lp.add_le(vec![1.0], 1.0);
        lp.add_ge(vec![1.0], 2.0);
        assert_eq!(maximize(&lp).unwrap_err(), LpError::Infeasible);
    }

    #[test]
    fn negative_rhs_uses_phase_one() {
        // max -x1 - x2 with x1 + x2 >= 3, x1 <= 2 -> x = (2, 1).
        let mut lp = DenseLp::new(vec![-1.0, -1.0]);
        lp.add_ge(vec![1.0, 1.0], 3.0);
        lp.add_le(vec![1.0, 0.0], 2.0);
        let sol = maximize(&lp).unwrap();
        assert!((sol.objective + 3.0).abs() < 1e-8);
    }

    #[test]
    fn degenerate_zero_rhs_terminates() {
        // Constraints through the origin; Bland must not cycle.
        let mut lp = DenseLp::new(vec![1.0, 1.0, 1.0]);
        lp.add_le(vec![1.0, -1.0, 0.0], 0.0);
        lp.add_le(vec![0.0, 1.0, -1.0], 0.0);
        lp.add_le(vec![1.0, 1.0, 1.0], 3.0);
        assert_solution(&lp, 3.0, Some(&[1.0, 1.0, 1.0]));
    }

    #[test]
    fn equality_via_pair_of_inequalities() {
        // max x + 2y with x + y = 1 (as <= and >=), y <= 0.6.
        let mut lp = DenseLp::new(vec![1.0, 2.0]);
        lp.add_le(vec![1.0, 1.0], 1.0);
        lp.add_ge(vec![1.0, 1.0], 1.0);
        lp.add_le(vec![0.0, 1.0], 0.6);
        assert_solution(&lp, 1.6, Some(&[0.4, 0.6]));
    }

    #[test]
    fn redundant_rows_survive_phase_one() {
        let mut lp = DenseLp::new(vec![1.0]);
        lp.add_ge(vec![1.0], 1.0);
        lp.add_ge(vec![1.0], 1.0);
        lp.add_le(vec![1.0], 2.0);
        assert_solution(&lp, 2.0, Some(&[2.0]));
    }
}

//! Linear programming: a small model type, a bounded revised simplex, and the
//! covering/packing programs built on trust graphs.

mod cover;
mod exact;
mod mwu;
mod presolve;
mod simplex;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

pub use cover::{
    build_cover_lp, build_packing_lp, robust_dual_multipliers, solve_cover, solve_packing_dual,
    solve_robust_cover, worst_exclusion, DualEntry, DualPacking, FractionalCover, RobustCoverSolver,
};
pub use exact::ExactSolution;
pub use mwu::{solve_cover_approx, ApproxCover};

pub(crate) use simplex::Simplex;

/// Primal feasibility tolerance, per constraint.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("basis matrix became singular")]
    Singular,
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("cutting-plane loop exceeded {0} rounds")]
    NonTermination(usize),
    #[error("dual multipliers requested before the cutting-plane solve converged")]
    NotConverged,
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    /// Sparse row as `(variable, coefficient)` pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub direction: Direction,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Per-variable `[lo, hi]`; infinite values are allowed.
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn new(direction: Direction, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            direction,
            objective,
            constraints: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(LpError::Malformed(format!(
                "{} bounds for {} variables",
                self.bounds.len(),
                n
            )));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::Malformed(format!("variable {j} has bounds [{lo}, {hi}]")));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {i} has non-finite rhs")));
            }
            for &(j, a) in &c.coeffs {
                if j >= n {
                    return Err(LpError::Malformed(format!("row {i} references variable {j}")));
                }
                if !a.is_finite() {
                    return Err(LpError::Malformed(format!("row {i} has a non-finite coefficient")));
                }
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("non-finite objective coefficient".into()));
        }
        Ok(())
    }

    /// Value of row `i` at `x`.
    pub fn row_activity(&self, i: usize, x: &[f64]) -> f64 {
        self.constraints[i].coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Largest bound or row violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            worst = worst.max(lo - x[j]).max(x[j] - hi);
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let act = self.row_activity(i, x);
            let v = match c.sense {
                Sense::Ge => c.rhs - act,
                Sense::Le => act - c.rhs,
                Sense::Eq => (act - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers in the direction of the original objective: for a
    /// minimization they are nonnegative on `≥` rows, for a maximization
    /// nonnegative on `≤` rows.
    pub duals: Vec<f64>,
    /// Reduced costs of the structural variables (multipliers of the bounds).
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    /// Rational re-solve of the final basis, when the instance is small
    /// enough and the basis verifies as optimal in exact arithmetic.
    pub exact: Option<ExactSolution>,
}

impl LpSolution {
    /// `bᵀy` plus the bound contributions: the dual objective.
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        let mut total: f64 = lp
            .constraints
            .iter()
            .zip(&self.duals)
            .map(|(c, y)| c.rhs * y)
            .sum();
        for (j, &d) in self.reduced_costs.iter().enumerate() {
            let (lo, hi) = lp.bounds[j];
            let sign = match lp.direction {
                Direction::Minimize => 1.0,
                Direction::Maximize => -1.0,
            };
            let d = d * sign;
            if d > 0.0 && lo.is_finite() {
                total += sign * d * lo;
            } else if d < 0.0 && hi.is_finite() {
                total += sign * d * hi;
            }
        }
        total
    }
}

/// Rows at or below this count get a rational re-verification.
pub const EXACT_VERIFY_MAX_ROWS: usize = 64;

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let mut simplex = Simplex::from_lp(lp);
    simplex.solve()?;
    let mut sol = simplex.solution(lp.direction);
    if lp.constraints.len() <= EXACT_VERIFY_MAX_ROWS {
        sol.exact = simplex.verify_exact(lp.direction);
    }
    Ok(sol)
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn textbook_max_problem() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let mut lp = LinearProgram::new(Direction::Maximize, vec![3.0, 5.0]);
        lp.add_constraint(vec![(0, 1.0)], Sense::Le, 4.0);
        lp.add_constraint(vec![(1, 2.0)], Sense::Le, 12.0);
        lp.add_constraint(vec![(0, 3.0), (1, 2.0)], Sense::Le, 18.0);
        let sol = solve_lp(&lp).unwrap();
        assert!(approx(sol.objective, 36.0));
        assert!(approx(sol.x[0], 2.0) && approx(sol.x[1], 6.0));
        assert!(approx(sol.dual_objective(&lp), 36.0));
        assert!(sol.duals.iter().all(|&y| y >= -1e-12));
        let exact = sol.exact.unwrap();
        assert_eq!(exact.objective.to_string(), "36");
    }

    #[test]
    fn min_with_equality_and_ge() {
        // min x + 2y + 3z, x + y + z = 1, y + z ≥ 0.5 → x=.5,y=.5 obj 1.5
        let mut lp = LinearProgram::new(Direction::Minimize, vec![1.0, 2.0, 3.0]);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0), (2, 1.0)], Sense::Eq, 1.0);
        lp.add_constraint(vec![(1, 1.0), (2, 1.0)], Sense::Ge, 0.5);
        let sol = solve_lp(&lp).unwrap();
        assert!(approx(sol.objective, 1.5));
        assert!(lp.max_violation(&sol.x) <= 1e-9);
        assert!(approx(sol.dual_objective(&lp), 1.5));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(Direction::Minimize, vec![1.0]);
        lp.add_constraint(vec![(0, 1.0)], Sense::Ge, 2.0);
        lp.add_constraint(vec![(0, 1.0)], Sense::Le, 1.0);
        assert!(matches!(solve_lp(&lp), Err(LpError::Infeasible)));

        let mut lp = LinearProgram::new(Direction::Maximize, vec![1.0, 1.0]);
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Sense::Le, 1.0);
        assert!(matches!(solve_lp(&lp), Err(LpError::Unbounded)));
    }

    #[test]
    fn free_and_negative_bounds() {
        // min x - y with x free, y in [-2, 3], x ≥ y - 1, x ≥ -y → optimum at y=3? x ≥ 2, obj 2 - 3 = -1
        let mut lp = LinearProgram::new(Direction::Minimize, vec![1.0, -1.0]);
        lp.bounds = vec![(f64::NEG_INFINITY, f64::INFINITY), (-2.0, 3.0)];
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Sense::Ge, -1.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Sense::Ge, 0.0);
        let sol = solve_lp(&lp).unwrap();
        assert!(approx(sol.objective, -1.0), "{}", sol.objective);
        assert!(lp.max_violation(&sol.x) <= 1e-9);
    }

    #[test]
    fn malformed_rejected() {
        let mut lp = LinearProgram::new(Direction::Minimize, vec![1.0]);
        lp.add_constraint(vec![(3, 1.0)], Sense::Ge, 1.0);
        assert!(matches!(solve_lp(&lp), Err(LpError::Malformed(_))));
        let mut lp = LinearProgram::new(Direction::Minimize, vec![1.0]);
        lp.bounds[0] = (2.0, 1.0);
        assert!(matches!(solve_lp(&lp), Err(LpError::Malformed(_))));
    }

    #[test]
    fn degenerate_klee_minty_like() {
        // a classic cycling example for Dantzig pricing without anti-cycling
        let mut lp = LinearProgram::new(Direction::Maximize, vec![10.0, -57.0, -9.0, -24.0]);
        lp.add_constraint(vec![(0, 0.5), (1, -5.5), (2, -2.5), (3, 9.0)], Sense::Le, 0.0);
        lp.add_constraint(vec![(0, 0.5), (1, -1.5), (2, -0.5), (3, 1.0)], Sense::Le, 0.0);
        lp.add_constraint(vec![(0, 1.0)], Sense::Le, 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert!(approx(sol.objective, 1.0));
    }
}

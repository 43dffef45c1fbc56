//! Covering programs over closed neighborhoods and their packing duals.
//!
//! The robust program has one constraint per vertex `v` and per exclusion
//! set `T ⊆ N(v)` with `|T| ≤ t_v`. It is solved by column generation on the
//! dual packing program, which keeps the basis at `n × n`: the row duals of
//! the restricted packing program are a cover `y`, and the separation oracle
//! (drop the `t_v` heaviest neighbors of `v`) finds the next column to add.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::presolve::reduce;
use super::{solve_lp, Direction, LinearProgram, LpError, Sense, Simplex, FEAS_TOL};
use crate::graph::{ThresholdVector, TrustGraph};

/// Per-vertex noise weights with their total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalCover {
    pub y: Vec<f64>,
    pub objective: f64,
    /// Thresholds of the robust program that produced `y`; `None` for the
    /// plain covering program.
    pub robust_t: Option<ThresholdVector>,
    pub tol: f64,
    /// Exact optimum as `p/q`, when the solver could certify it rationally.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_objective: Option<String>,
}

impl FractionalCover {
    pub fn from_weights(y: Vec<f64>, robust_t: Option<ThresholdVector>) -> Self {
        let objective = y.iter().sum();
        Self {
            y,
            objective,
            robust_t,
            tol: FEAS_TOL,
            exact_objective: None,
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Noise mass left at `v` after the adversary removes the heaviest
    /// `t_v` neighbors, together with the removed set.
    pub fn residual_mass(&self, g: &TrustGraph, v: usize, t_v: usize) -> (f64, Vec<usize>) {
        let excluded = worst_exclusion(g, &self.y, v, t_v);
        (exclusion_mass(g, &self.y, v, &excluded), excluded)
    }

    /// Vertex with the smallest residual mass, and that mass.
    pub fn min_coverage(&self, g: &TrustGraph, t: Option<&ThresholdVector>) -> (usize, f64) {
        let mut worst = (0, f64::INFINITY);
        for v in 0..g.n() {
            let t_v = t.map_or(0, |t| t.get(v));
            let (mass, _) = self.residual_mass(g, v, t_v);
            if mass < worst.1 {
                worst = (v, mass);
            }
        }
        worst
    }

    /// Checks box bounds and every (robust) covering constraint through the
    /// separation oracle.
    pub fn is_feasible(&self, g: &TrustGraph, t: Option<&ThresholdVector>) -> bool {
        if self.y.len() != g.n() || t.is_some_and(|t| t.len() != g.n()) {
            return false;
        }
        if self.y.iter().any(|&y| !(-self.tol..=1.0 + self.tol).contains(&y)) {
            return false;
        }
        g.n() == 0 || self.min_coverage(g, t).1 >= 1.0 - self.tol
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("cover json is always serializable")
    }

    pub fn from_json_str(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// The `t_v` neighbors of `v` with the largest weights (ties to the lower
/// id), returned sorted. `t_v` is capped at `deg(v)`.
pub fn worst_exclusion(g: &TrustGraph, y: &[f64], v: usize, t_v: usize) -> Vec<usize> {
    let nbrs = g.neighbors(v);
    let t_v = t_v.min(nbrs.len());
    if t_v == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = nbrs.to_vec();
    order.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
    order.truncate(t_v);
    order.sort_unstable();
    order
}

/// `Σ_{u ∈ N[v] ∖ excluded} y_u`; `excluded` must be sorted.
pub(crate) fn exclusion_mass(g: &TrustGraph, y: &[f64], v: usize, excluded: &[usize]) -> f64 {
    let mut mass = y[v];
    for &u in g.neighbors(v) {
        if excluded.binary_search(&u).is_err() {
            mass += y[u];
        }
    }
    mass
}

fn support(g: &TrustGraph, v: usize, excluded: &[usize]) -> Vec<usize> {
    g.closed_unchecked(v)
        .into_iter()
        .filter(|u| excluded.binary_search(u).is_err())
        .collect()
}

/// `min Σ y_u` subject to `Σ_{u∈N[v]} y_u ≥ 1` for every `v`, `y ∈ [0,1]`.
pub fn build_cover_lp(g: &TrustGraph) -> LinearProgram {
    let n = g.n();
    let mut lp = LinearProgram::new(Direction::Minimize, vec![1.0; n]);
    lp.bounds = vec![(0.0, 1.0); n];
    for v in 0..n {
        let row = g.closed_unchecked(v).into_iter().map(|u| (u, 1.0)).collect();
        lp.add_constraint(row, Sense::Ge, 1.0);
    }
    lp
}

/// `max Σ w_v` subject to `Σ_{v∈N[u]} w_v ≤ 1` for every `u`, `w ∈ [0,1]`.
pub fn build_packing_lp(g: &TrustGraph) -> LinearProgram {
    let n = g.n();
    let mut lp = LinearProgram::new(Direction::Maximize, vec![1.0; n]);
    lp.bounds = vec![(0.0, 1.0); n];
    for u in 0..n {
        let row = g.closed_unchecked(u).into_iter().map(|v| (v, 1.0)).collect();
        lp.add_constraint(row, Sense::Le, 1.0);
    }
    lp
}

/// Optimal cover for the plain program.
///
/// The upper bounds `y ≤ 1` are dropped before solving: any `y_u > 1` can be
/// lowered to 1 without breaking a constraint, so the optimum is unchanged,
/// and without them the row multipliers alone form a feasible packing.
pub fn solve_cover(g: &TrustGraph) -> Result<FractionalCover, LpError> {
    Ok(solve_cover_with_dual(g)?.0)
}

/// Optimal cover together with the packing read off the row multipliers.
///
/// Dominated rows and columns are removed first (see [`presolve`]); the
/// reduced program has the same optimum and its solution is lifted back.
///
/// [`presolve`]: super::presolve
pub fn solve_cover_with_dual(g: &TrustGraph) -> Result<(FractionalCover, DualPacking), LpError> {
    let n = g.n();
    let supports: Vec<Vec<usize>> = (0..n).map(|v| g.closed_unchecked(v)).collect();
    let reduced = reduce(&supports, n);
    let mut index = vec![usize::MAX; n];
    for (i, &c) in reduced.cols.iter().enumerate() {
        index[c] = i;
    }
    let mut lp = LinearProgram::new(Direction::Minimize, vec![1.0; reduced.cols.len()]);
    for support in &reduced.row_support {
        lp.add_constraint(support.iter().map(|&c| (index[c], 1.0)).collect(), Sense::Ge, 1.0);
    }
    let sol = solve_lp(&lp)?;
    let mut y = vec![0.0; n];
    for (i, &c) in reduced.cols.iter().enumerate() {
        y[c] = sol.x[i].clamp(0.0, 1.0);
    }
    let mut w = vec![0.0; n];
    for (k, &r) in reduced.rows.iter().enumerate() {
        w[r] = sol.duals[k].max(0.0);
    }
    let mut cover = FractionalCover::from_weights(y, None);
    if let Some(exact) = &sol.exact {
        cover.exact_objective = Some(exact.objective.to_string());
    }
    Ok((cover, DualPacking::from_vertex_weights(w)))
}

/// One dual variable: the constraint of `vertex` with `excluded` removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualEntry {
    pub vertex: usize,
    pub excluded: Vec<usize>,
    pub weight: f64,
}

/// Packing-side solution: weights on (vertex, exclusion set) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPacking {
    pub entries: Vec<DualEntry>,
    pub objective: f64,
}

impl DualPacking {
    pub fn from_vertex_weights(w: Vec<f64>) -> Self {
        let entries: Vec<DualEntry> = w
            .into_iter()
            .enumerate()
            .filter(|&(_, w)| w > 0.0)
            .map(|(vertex, weight)| DualEntry {
                vertex,
                excluded: Vec::new(),
                weight,
            })
            .collect();
        let objective = entries.iter().map(|e| e.weight).sum();
        Self { entries, objective }
    }

    /// Total weight per vertex, summed over exclusion sets.
    pub fn vertex_weights(&self, n: usize) -> Vec<f64> {
        let mut w = vec![0.0; n];
        for e in &self.entries {
            w[e.vertex] += e.weight;
        }
        w
    }

    /// `max_s Σ_{(v,T): s ∈ N[v]∖T} w_{v,T}`; at most 1 for a feasible packing.
    pub fn max_load(&self, g: &TrustGraph) -> f64 {
        let mut load = vec![0.0; g.n()];
        for e in &self.entries {
            for s in support(g, e.vertex, &e.excluded) {
                load[s] += e.weight;
            }
        }
        load.into_iter().fold(0.0, f64::max)
    }

    pub fn is_feasible(&self, g: &TrustGraph, tol: f64) -> bool {
        self.entries.iter().all(|e| e.weight >= -tol) && self.max_load(g) <= 1.0 + tol
    }
}

/// Optimal fractional packing, solved directly as a maximization.
pub fn solve_packing_dual(g: &TrustGraph) -> Result<DualPacking, LpError> {
    let sol = solve_lp(&build_packing_lp(g))?;
    Ok(DualPacking::from_vertex_weights(sol.x.iter().map(|w| w.clamp(0.0, 1.0)).collect()))
}

/// Column-generation solver for the robust covering program.
pub struct RobustCoverSolver<'g> {
    g: &'g TrustGraph,
    t: ThresholdVector,
    clamped: ThresholdVector,
    simplex: Simplex,
    columns: Vec<(usize, Vec<usize>)>,
    seen: HashSet<(usize, Vec<usize>)>,
    converged: bool,
    rounds: usize,
}

impl<'g> RobustCoverSolver<'g> {
    pub fn new(g: &'g TrustGraph, t: &ThresholdVector) -> Result<Self, LpError> {
        t.check_len(g)?;
        let n = g.n();
        let mut lp = LinearProgram::new(Direction::Maximize, vec![1.0; n]);
        for s in 0..n {
            let row = g.closed_unchecked(s).into_iter().map(|v| (v, 1.0)).collect();
            lp.add_constraint(row, Sense::Le, 1.0);
        }
        let columns: Vec<(usize, Vec<usize>)> = (0..n).map(|v| (v, Vec::new())).collect();
        Ok(Self {
            g,
            t: t.clone(),
            clamped: t.clamped(g),
            simplex: Simplex::from_lp(&lp),
            seen: columns.iter().cloned().collect(),
            columns,
            converged: false,
            rounds: 0,
        })
    }

    /// Number of distinct constraints the robust program has, saturating.
    pub fn constraint_count(&self) -> usize {
        (0..self.g.n()).fold(0usize, |acc, v| {
            let d = self.g.degree(v);
            let mut total = 0usize;
            for k in 0..=self.clamped.get(v) {
                total = total.saturating_add(binomial(d, k));
            }
            acc.saturating_add(total)
        })
    }

    fn current_y(&self) -> Vec<f64> {
        // internal duals of a maximization carry the opposite sign
        self.simplex
            .row_duals()
            .iter()
            .map(|p| (-p).clamp(0.0, 1.0))
            .collect()
    }

    pub fn solve(&mut self) -> Result<FractionalCover, LpError> {
        let cap = self.constraint_count();
        loop {
            self.simplex.solve()?;
            let y = self.current_y();
            let mut added = 0;
            for v in 0..self.g.n() {
                let excluded = worst_exclusion(self.g, &y, v, self.clamped.get(v));
                if exclusion_mass(self.g, &y, v, &excluded) >= 1.0 - FEAS_TOL {
                    continue;
                }
                if !self.seen.insert((v, excluded.clone())) {
                    continue;
                }
                let col = support(self.g, v, &excluded).into_iter().map(|s| (s, 1.0)).collect();
                self.simplex.add_column(-1.0, col, 0.0, f64::INFINITY);
                self.columns.push((v, excluded));
                added += 1;
            }
            if added == 0 {
                self.converged = true;
                return Ok(FractionalCover::from_weights(y, Some(self.t.clone())));
            }
            self.rounds += 1;
            if self.rounds > cap {
                return Err(LpError::NonTermination(cap));
            }
        }
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn generated_constraints(&self) -> usize {
        self.columns.len()
    }

    pub fn simplex_iterations(&self) -> usize {
        self.simplex.iterations()
    }

    /// Weights of the generated constraints in the final restricted program.
    pub fn dual_multipliers(&self) -> Result<DualPacking, LpError> {
        if !self.converged {
            return Err(LpError::NotConverged);
        }
        let x = self.simplex.structural_values();
        let entries: Vec<DualEntry> = self
            .columns
            .iter()
            .zip(x)
            .filter(|(_, &w)| w > 1e-12)
            .map(|((v, excluded), &w)| DualEntry {
                vertex: *v,
                excluded: excluded.clone(),
                weight: w,
            })
            .collect();
        let objective = entries.iter().map(|e| e.weight).sum();
        Ok(DualPacking { entries, objective })
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return usize::MAX,
        };
    }
    acc
}

pub fn solve_robust_cover(g: &TrustGraph, t: &ThresholdVector) -> Result<FractionalCover, LpError> {
    RobustCoverSolver::new(g, t)?.solve()
}

/// Solves the robust program and returns its optimal dual weights.
pub fn robust_dual_multipliers(g: &TrustGraph, t: &ThresholdVector) -> Result<DualPacking, LpError> {
    let mut solver = RobustCoverSolver::new(g, t)?;
    solver.solve()?;
    solver.dual_multipliers()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::graph::make_threshold;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-6 * b.abs().max(1.0)
    }

    /// Smallest dominating set by subset enumeration.
    fn brute_domination(g: &TrustGraph) -> usize {
        let n = g.n();
        (0u32..1 << n)
            .filter(|mask| (0..n).all(|v| g.closed_unchecked(v).iter().any(|&u| mask >> u & 1 == 1)))
            .map(|m| m.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn cover_lp_shape() {
        let lp = build_cover_lp(&fig1());
        assert_eq!(lp.num_vars(), 5);
        assert_eq!(lp.constraints.len(), 5);
        let e_row: Vec<usize> = lp.constraints[4].coeffs.iter().map(|c| c.0).collect();
        assert_eq!(e_row, vec![3, 4]);
        let star_lp = build_cover_lp(&star(8));
        assert!(star_lp.constraints.iter().all(|c| c.coeffs.iter().any(|e| e.0 == 0)));
        let single = build_cover_lp(&TrustGraph::edgeless(1));
        assert_eq!(single.constraints[0].coeffs, vec![(0, 1.0)]);
    }

    #[test]
    fn fig1_cover_is_two() {
        let g = fig1();
        let (cover, dual) = solve_cover_with_dual(&g).unwrap();
        assert!(close(cover.objective, 2.0));
        assert!(cover.is_feasible(&g, None));
        assert_eq!(cover.exact_objective.as_deref(), Some("2"));
        // the integral optimum matches, so the relaxation has no gap here
        assert_eq!(brute_domination(&g), 2);
        assert!(dual.is_feasible(&g, 1e-9));
        assert!(close(dual.objective, 2.0));
        // the stated optimal cover and the dual certificate w_A = w_E = 1
        let stated = FractionalCover::from_weights(vec![0.0, 0.0, 1.0, 0.0, 1.0], None);
        assert!(stated.is_feasible(&g, None));
        let cert = DualPacking::from_vertex_weights(vec![1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(cert.is_feasible(&g, 0.0));
        assert_eq!(cert.objective, 2.0);
    }

    #[test]
    fn rook4_is_sixteen_sevenths() {
        let g = rook(4);
        let cover = solve_cover(&g).unwrap();
        assert!(close(cover.objective, 16.0 / 7.0));
        assert_eq!(cover.exact_objective.as_deref(), Some("16/7"));
        let dual = solve_packing_dual(&g).unwrap();
        assert!(close(dual.objective, 16.0 / 7.0));
    }

    #[test]
    fn closed_form_optima() {
        assert!(close(solve_cover(&star(8)).unwrap().objective, 1.0));
        assert!(close(solve_cover(&cycle(9)).unwrap().objective, 3.0));
        assert!(close(solve_cover(&complete(6)).unwrap().objective, 1.0));
        assert!(close(solve_cover(&petersen()).unwrap().objective, 2.5));
        assert!(close(solve_cover(&rook(6)).unwrap().objective, 36.0 / 11.0));
        let e = solve_packing_dual(&TrustGraph::edgeless(5)).unwrap();
        assert!(close(e.objective, 5.0));
    }

    #[test]
    fn robust_degenerates_to_plain_at_zero() {
        let g = fig1();
        let c = solve_robust_cover(&g, &ThresholdVector::zeros(5)).unwrap();
        assert!(close(c.objective, 2.0));
        let d = robust_dual_multipliers(&g, &ThresholdVector::zeros(5)).unwrap();
        assert!(close(d.objective, 2.0));
    }

    #[test]
    fn robust_fig1_with_unit_thresholds() {
        let g = fig1();
        let t = ThresholdVector::uniform(5, 1);
        let mut solver = RobustCoverSolver::new(&g, &t).unwrap();
        assert!(matches!(solver.dual_multipliers(), Err(LpError::NotConverged)));
        let c = solver.solve().unwrap();
        assert!(close(c.objective, 3.0), "{}", c.objective);
        assert!(c.is_feasible(&g, Some(&t)));
        let d = solver.dual_multipliers().unwrap();
        assert!(close(d.objective, 3.0));
        assert!(d.is_feasible(&g, 1e-9));
        let hand = FractionalCover::from_weights(vec![0.5, 0.5, 1.0, 0.0, 1.0], None);
        assert!(hand.is_feasible(&g, Some(&t)));
    }

    #[test]
    fn full_mistrust_is_local() {
        for g in [fig1(), rook(3), star(5), petersen()] {
            let t = make_threshold(&g, 1.0).unwrap();
            let c = solve_robust_cover(&g, &t).unwrap();
            assert!(close(c.objective, g.n() as f64));
        }
    }

    #[test]
    fn single_vertex_dual() {
        let g = TrustGraph::edgeless(1);
        let d = robust_dual_multipliers(&g, &ThresholdVector::zeros(1)).unwrap();
        assert_eq!(d.entries.len(), 1);
        assert_eq!(d.entries[0].vertex, 0);
        assert!(d.entries[0].excluded.is_empty());
        assert!(close(d.entries[0].weight, 1.0));
    }

    #[test]
    fn separation_ties_prefer_low_ids() {
        let g = star(4);
        let y = vec![0.5, 0.25, 0.25, 0.25, 0.25];
        assert_eq!(worst_exclusion(&g, &y, 0, 2), vec![1, 2]);
        assert_eq!(worst_exclusion(&g, &y, 1, 5), vec![0]);
    }

    #[test]
    fn cover_json_shape() {
        let c = FractionalCover::from_weights(vec![1.0, 0.0], Some(ThresholdVector(vec![0, 1])));
        let v: serde_json::Value = serde_json::from_str(&c.to_json_string()).unwrap();
        assert_eq!(v["robust_t"], serde_json::json!([0, 1]));
        assert_eq!(v["tol"], serde_json::json!(1e-9));
        assert_eq!(FractionalCover::from_json_str(&c.to_json_string()).unwrap(), c);
    }

    #[test]
    fn binomial_saturates() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(1000, 500), usize::MAX);
    }
}

//! Bounded revised simplex with a dense basis inverse.
//!
//! Rows are turned into equalities `A x − r = 0` with one logical variable
//! `r_i` per row carrying the row's bounds. Variables `0..m` are logicals,
//! structurals follow. The starting basis is all logicals (`B = −I`).
//!
//! A primal-feasible start runs primal simplex directly. Otherwise nonbasic
//! variables are parked at the bound their cost favours (an artificial bound
//! of ±1e9 when none exists) and dual simplex restores primal feasibility.
//! Pricing is Devex (primal) and dual steepest edge (dual) with Harris ratio
//! tests; a long run of degenerate pivots switches to Bland's rule until
//! progress resumes. If reinversion finds the basis numerically singular,
//! the dependent columns are swapped for logicals and the solve restarts.

use super::exact::{verify_basis, ExactSolution};
use super::{Direction, LinearProgram, LpError, LpSolution, Sense};

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-7;
const SINGULAR_TOL: f64 = 1e-9;
const MAX_REPAIRS: usize = 20;
const ARTIFICIAL: f64 = 1e9;
const BLAND_AFTER: usize = 50;
const REFRESH_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic(usize),
    Lower,
    Upper,
    /// Free nonbasic, held at zero.
    Zero,
}

pub(crate) struct Simplex {
    m: usize,
    /// Structural columns as sparse `(row, value)` lists.
    cols: Vec<Vec<(usize, f64)>>,
    /// Internal (minimization) cost per variable, logicals first.
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    artificial: Vec<bool>,
    x: Vec<f64>,
    state: Vec<State>,
    head: Vec<usize>,
    /// Row-major `m × m` basis inverse.
    binv: Vec<f64>,
    /// Squared norms of the rows of `B⁻¹`, for dual steepest-edge pricing.
    row_norms: Vec<f64>,
    /// Devex reference weights for primal pricing.
    devex: Vec<f64>,
    d: Vec<f64>,
    pi: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    degenerate_run: usize,
    since_refresh: usize,
    /// Set when a reinversion repaired the basis; the current phase stops
    /// and `solve` starts over from the repaired basis.
    repaired: bool,
    repairs: usize,
}

impl Simplex {
    pub(crate) fn from_lp(lp: &LinearProgram) -> Self {
        let m = lp.constraints.len();
        let n = lp.num_vars();
        let mut cols = vec![Vec::new(); n];
        for (i, c) in lp.constraints.iter().enumerate() {
            for &(j, a) in &c.coeffs {
                if a != 0.0 {
                    cols[j].push((i, a));
                }
            }
        }
        // merge duplicate entries within a column
        for col in &mut cols {
            col.sort_by_key(|e| e.0);
            col.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            col.retain(|e| e.1 != 0.0);
        }
        let sign = match lp.direction {
            Direction::Minimize => 1.0,
            Direction::Maximize => -1.0,
        };
        let mut s = Self::empty(m);
        for (i, c) in lp.constraints.iter().enumerate() {
            let (lo, hi) = match c.sense {
                Sense::Ge => (c.rhs, f64::INFINITY),
                Sense::Le => (f64::NEG_INFINITY, c.rhs),
                Sense::Eq => (c.rhs, c.rhs),
            };
            s.lo[i] = lo;
            s.hi[i] = hi;
        }
        for (j, col) in cols.into_iter().enumerate() {
            let (lo, hi) = lp.bounds[j];
            s.push_column(sign * lp.objective[j], col, lo, hi);
        }
        s
    }

    fn empty(m: usize) -> Self {
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = -1.0;
        }
        Self {
            m,
            cols: Vec::new(),
            cost: vec![0.0; m],
            lo: vec![f64::NEG_INFINITY; m],
            hi: vec![f64::INFINITY; m],
            artificial: vec![false; m],
            x: vec![0.0; m],
            state: (0..m).map(State::Basic).collect(),
            head: (0..m).collect(),
            binv,
            row_norms: vec![1.0; m],
            devex: vec![1.0; m],
            d: vec![0.0; m],
            pi: vec![0.0; m],
            iterations: 0,
            max_iterations: 0,
            degenerate_run: 0,
            since_refresh: 0,
            repaired: false,
            repairs: 0,
        }
    }

    fn push_column(&mut self, cost: f64, col: Vec<(usize, f64)>, lo: f64, hi: f64) -> usize {
        let (x, state) = if lo.is_finite() {
            (lo, State::Lower)
        } else if hi.is_finite() {
            (hi, State::Upper)
        } else {
            (0.0, State::Zero)
        };
        self.cols.push(col);
        self.cost.push(cost);
        self.lo.push(lo);
        self.hi.push(hi);
        self.artificial.push(false);
        self.x.push(x);
        self.state.push(state);
        self.d.push(cost);
        self.devex.push(1.0);
        self.cols.len() + self.m - 1
    }

    /// Appends a structural column (internal minimization cost) after a
    /// solve. Its reduced cost is priced against the current duals.
    pub(crate) fn add_column(&mut self, cost: f64, col: Vec<(usize, f64)>, lo: f64, hi: f64) -> usize {
        let k = self.push_column(cost, col, lo, hi);
        self.d[k] = cost - self.dot_pi(k);
        if self.x[k] != 0.0 {
            // a nonzero starting value shifts the basic variables
            let v = self.x[k];
            let mut rhs = vec![0.0; self.m];
            self.for_col(k, |i, a| rhs[i] += a * v);
            for p in 0..self.m {
                let row = &self.binv[p * self.m..(p + 1) * self.m];
                let delta: f64 = row.iter().zip(&rhs).map(|(b, r)| b * r).sum();
                let h = self.head[p];
                self.x[h] -= delta;
            }
        }
        k
    }

    #[cfg(test)]
    pub(crate) fn num_structural(&self) -> usize {
        self.cols.len()
    }

    fn nvars(&self) -> usize {
        self.m + self.cols.len()
    }

    #[inline]
    fn for_col(&self, k: usize, mut f: impl FnMut(usize, f64)) {
        if k < self.m {
            f(k, -1.0);
        } else {
            for &(i, a) in &self.cols[k - self.m] {
                f(i, a);
            }
        }
    }

    fn dot_pi(&self, k: usize) -> f64 {
        let mut s = 0.0;
        self.for_col(k, |i, a| s += self.pi[i] * a);
        s
    }

    /// `B⁻¹ a_k`, indexed by basis position.
    fn ftran(&self, k: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        self.for_col(k, |i, a| {
            for (p, o) in out.iter_mut().enumerate() {
                *o += self.binv[p * m + i] * a;
            }
        });
        out
    }

    /// Entries `(B⁻¹ a_j)_r` for every variable `j`, basic ones included.
    fn pivot_row(&self, r: usize) -> Vec<f64> {
        let m = self.m;
        let row = &self.binv[r * m..(r + 1) * m];
        let mut out = vec![0.0; self.nvars()];
        for (i, o) in out.iter_mut().take(m).enumerate() {
            *o = -row[i];
        }
        for (j, col) in self.cols.iter().enumerate() {
            out[m + j] = col.iter().map(|&(i, a)| row[i] * a).sum();
        }
        out
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64], prow: &[f64]) {
        let m = self.m;
        let leaving = self.head[r];
        // reduced costs
        let ratio = self.d[q] / alpha[r];
        if ratio != 0.0 {
            for (j, dj) in self.d.iter_mut().enumerate() {
                if prow[j] != 0.0 && !matches!(self.state[j], State::Basic(_)) {
                    *dj -= ratio * prow[j];
                }
            }
            self.d[leaving] = -ratio;
        } else {
            self.d[leaving] = 0.0;
        }
        self.d[q] = 0.0;
        // eta update of the inverse
        let piv = alpha[r];
        {
            let (before, rest) = self.binv.split_at_mut(r * m);
            let (prow_b, after) = rest.split_at_mut(m);
            let mut norm = 0.0;
            let mut nz = Vec::new();
            for (j, v) in prow_b.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v /= piv;
                    norm += *v * *v;
                    nz.push(j);
                }
            }
            self.row_norms[r] = norm;
            for (p, &a) in alpha.iter().enumerate() {
                if p == r || a == 0.0 {
                    continue;
                }
                let target = if p < r {
                    &mut before[p * m..(p + 1) * m]
                } else {
                    &mut after[(p - r - 1) * m..(p - r) * m]
                };
                let mut delta = 0.0;
                for &j in &nz {
                    let old = target[j];
                    let new = old - a * prow_b[j];
                    target[j] = new;
                    delta += new * new - old * old;
                }
                self.row_norms[p] = (self.row_norms[p] + delta).max(0.0);
            }
        }
        self.head[r] = q;
        self.state[q] = State::Basic(r);
        self.state[leaving] = if self.lo[leaving] == self.hi[leaving] {
            State::Lower
        } else if (self.x[leaving] - self.lo[leaving]).abs() <= (self.x[leaving] - self.hi[leaving]).abs() {
            State::Lower
        } else {
            State::Upper
        };
        self.x[leaving] = match self.state[leaving] {
            State::Lower => self.lo[leaving],
            _ => self.hi[leaving],
        };
        if !self.x[leaving].is_finite() {
            // a free variable leaving the basis: park it at zero
            self.state[leaving] = State::Zero;
            self.x[leaving] = 0.0;
        }
    }

    /// Recomputes basic values and reduced costs from the current inverse.
    fn recompute(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for k in 0..self.nvars() {
            if matches!(self.state[k], State::Basic(_)) || self.x[k] == 0.0 {
                continue;
            }
            let v = self.x[k];
            self.for_col(k, |i, a| rhs[i] += a * v);
        }
        for p in 0..m {
            let row = &self.binv[p * m..(p + 1) * m];
            let s: f64 = row.iter().zip(&rhs).map(|(b, r)| b * r).sum();
            self.x[self.head[p]] = -s;
        }
        let mut pi = vec![0.0; m];
        for p in 0..m {
            let c = self.cost[self.head[p]];
            if c == 0.0 {
                continue;
            }
            let row = &self.binv[p * m..(p + 1) * m];
            for (pv, &b) in pi.iter_mut().zip(row) {
                *pv += c * b;
            }
        }
        self.pi = pi;
        for k in 0..self.nvars() {
            self.d[k] = if matches!(self.state[k], State::Basic(_)) {
                0.0
            } else {
                self.cost[k] - self.dot_pi(k)
            };
        }
        self.since_refresh = 0;
    }

    /// Max-norm of `A x − r`.
    fn residual(&self) -> f64 {
        let m = self.m;
        let mut act = vec![0.0; m];
        for k in 0..self.nvars() {
            let v = self.x[k];
            if v != 0.0 {
                self.for_col(k, |i, a| act[i] += a * v);
            }
        }
        let scale = self.x.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        act.iter().fold(0.0f64, |s, v| s.max(v.abs())) / scale
    }

    fn refresh(&mut self) -> Result<(), LpError> {
        self.recompute();
        if self.residual() > 1e-10 {
            self.reinvert()?;
            self.recompute();
        }
        Ok(())
    }

    /// Rebuilds `B⁻¹` from scratch. Logical basic columns are unit vectors,
    /// so only the structural block restricted to the uncovered rows needs a
    /// dense inversion.
    fn reinvert(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut logical_pos = vec![usize::MAX; m];
        let mut structural = Vec::new();
        for (p, &k) in self.head.iter().enumerate() {
            if k < m {
                logical_pos[k] = p;
            } else {
                structural.push((p, k));
            }
        }
        let free_rows: Vec<usize> = (0..m).filter(|&i| logical_pos[i] == usize::MAX).collect();
        let ks = structural.len();
        if free_rows.len() != ks {
            return Err(LpError::Singular);
        }
        let mut local = vec![usize::MAX; m];
        for (l, &i) in free_rows.iter().enumerate() {
            local[i] = l;
        }
        // M = A[free_rows, structural]
        let mut mat = vec![0.0; ks * ks];
        for (c, &(_, k)) in structural.iter().enumerate() {
            for &(i, a) in &self.cols[k - m] {
                if local[i] != usize::MAX {
                    mat[local[i] * ks + c] = a;
                }
            }
        }
        let minv = match invert_dense(&mut mat, ks) {
            Ok(inv) => inv,
            Err(dep) => {
                self.repair(&structural, &free_rows, dep)?;
                return self.reinvert();
            }
        };
        let mut binv = vec![0.0; m * m];
        // rows of logicals: z_p(i) = -e_j[i] for j logical-covered
        for i in 0..m {
            if logical_pos[i] != usize::MAX {
                binv[logical_pos[i] * m + i] = -1.0;
            }
        }
        for (c, &(p, k)) in structural.iter().enumerate() {
            for (l, &j) in free_rows.iter().enumerate() {
                binv[p * m + j] = minv[c * ks + l];
            }
            // contribution of this structural to logical rows
            for &(i, a) in &self.cols[k - m] {
                let lp = logical_pos[i];
                if lp == usize::MAX {
                    continue;
                }
                for (l, &j) in free_rows.iter().enumerate() {
                    binv[lp * m + j] += a * minv[c * ks + l];
                }
            }
        }
        self.row_norms = (0..m).map(|p| binv[p * m..(p + 1) * m].iter().map(|v| v * v).sum()).collect();
        self.binv = binv;
        Ok(())
    }

    /// Replaces dependent basic structurals with the logicals of the rows
    /// that lost their pivot.
    fn repair(&mut self, structural: &[(usize, usize)], free_rows: &[usize], dep: Dependent) -> Result<(), LpError> {
        self.repairs += 1;
        if self.repairs > MAX_REPAIRS || dep.columns.len() != dep.rows.len() {
            return Err(LpError::Singular);
        }
        for (&c, &l) in dep.columns.iter().zip(&dep.rows) {
            let (p, k) = structural[c];
            let logical = free_rows[l];
            self.state[k] = if !self.lo[k].is_finite() && !self.hi[k].is_finite() {
                State::Zero
            } else if !self.hi[k].is_finite() || (self.lo[k].is_finite() && (self.x[k] - self.lo[k]).abs() <= (self.hi[k] - self.x[k]).abs()) {
                State::Lower
            } else {
                State::Upper
            };
            self.x[k] = match self.state[k] {
                State::Lower => self.lo[k],
                State::Upper => self.hi[k],
                _ => 0.0,
            };
            self.head[p] = logical;
            self.state[logical] = State::Basic(p);
        }
        self.repaired = true;
        Ok(())
    }

    fn primal_feasible(&self) -> bool {
        self.head
            .iter()
            .all(|&k| self.x[k] >= self.lo[k] - PRIMAL_TOL && self.x[k] <= self.hi[k] + PRIMAL_TOL)
    }

    fn make_dual_feasible(&mut self) {
        for k in 0..self.nvars() {
            if matches!(self.state[k], State::Basic(_)) || self.lo[k] == self.hi[k] {
                continue;
            }
            let d = self.d[k];
            if d < -DUAL_TOL {
                if !self.hi[k].is_finite() {
                    self.hi[k] = ARTIFICIAL.max(self.lo[k] + ARTIFICIAL);
                    self.artificial[k] = true;
                }
                self.state[k] = State::Upper;
                self.x[k] = self.hi[k];
            } else if d > DUAL_TOL {
                if !self.lo[k].is_finite() {
                    self.lo[k] = (-ARTIFICIAL).min(self.hi[k] - ARTIFICIAL);
                    self.artificial[k] = true;
                }
                self.state[k] = State::Lower;
                self.x[k] = self.lo[k];
            }
        }
    }

    pub(crate) fn solve(&mut self) -> Result<(), LpError> {
        self.max_iterations = 50 * (self.m + self.nvars()) + 10_000;
        self.iterations = 0;
        self.repairs = 0;
        self.recompute();
        loop {
            self.repaired = false;
            self.run_phases()?;
            if !self.repaired {
                break;
            }
            self.refresh()?;
        }
        for k in 0..self.nvars() {
            if self.artificial[k] && self.x[k].abs() >= 0.5 * ARTIFICIAL {
                return Err(LpError::Unbounded);
            }
        }
        Ok(())
    }

    fn run_phases(&mut self) -> Result<(), LpError> {
        if !self.primal_feasible() {
            self.make_dual_feasible();
            self.recompute();
            self.dual_phase()?;
            self.refresh()?;
            if self.repaired {
                return Ok(());
            }
        }
        self.primal_phase()?;
        self.refresh()?;
        if !self.repaired && !self.primal_feasible() {
            // drift after refresh; one more round of cleanup
            self.make_dual_feasible();
            self.recompute();
            self.dual_phase()?;
            self.primal_phase()?;
            self.refresh()?;
        }
        Ok(())
    }

    fn tick(&mut self) -> Result<(), LpError> {
        self.iterations += 1;
        if self.iterations > self.max_iterations {
            return Err(LpError::IterationLimit(self.max_iterations));
        }
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_EVERY {
            self.refresh()?;
        }
        Ok(())
    }

    fn primal_phase(&mut self) -> Result<(), LpError> {
        loop {
            self.tick()?;
            if self.repaired {
                return Ok(());
            }
            let bland = self.degenerate_run >= BLAND_AFTER;
            // entering variable
            let mut best: Option<(usize, f64)> = None;
            for k in 0..self.nvars() {
                let d = self.d[k];
                let eligible = match self.state[k] {
                    State::Basic(_) => false,
                    _ if self.lo[k] == self.hi[k] => false,
                    State::Lower => d < -DUAL_TOL,
                    State::Upper => d > DUAL_TOL,
                    State::Zero => d.abs() > DUAL_TOL,
                };
                if !eligible {
                    continue;
                }
                if bland {
                    best = Some((k, f64::INFINITY));
                    break;
                }
                let score = d * d / self.devex[k];
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((k, score));
                }
            }
            let Some((q, _)) = best else {
                return Ok(());
            };
            let dir = match self.state[q] {
                State::Lower => 1.0,
                State::Upper => -1.0,
                _ => -self.d[q].signum(),
            };
            let alpha = self.ftran(q);
            // Harris ratio test: bound the step with slightly relaxed limits,
            // then take the largest pivot among rows that block within it
            let limit_of = |p: usize, relax: f64| -> Option<f64> {
                let a = alpha[p];
                if a.abs() <= PIVOT_TOL {
                    return None;
                }
                let k = self.head[p];
                let rate = -dir * a;
                if rate < 0.0 {
                    self.lo[k].is_finite().then(|| ((self.x[k] - self.lo[k] + relax) / -rate).max(0.0))
                } else {
                    self.hi[k].is_finite().then(|| ((self.hi[k] - self.x[k] + relax) / rate).max(0.0))
                }
            };
            let mut leave: Option<usize> = None;
            let mut theta = f64::INFINITY;
            if bland {
                for p in 0..self.m {
                    if let Some(limit) = limit_of(p, 0.0) {
                        let better = match leave {
                            None => true,
                            Some(lp) => limit < theta - 1e-12 || (limit <= theta + 1e-12 && self.head[p] < self.head[lp]),
                        };
                        if better {
                            theta = theta.min(limit);
                            leave = Some(p);
                        }
                    }
                }
            } else {
                let bound = (0..self.m).filter_map(|p| limit_of(p, PRIMAL_TOL)).fold(f64::INFINITY, f64::min);
                if bound.is_finite() {
                    for p in 0..self.m {
                        if let Some(limit) = limit_of(p, 0.0) {
                            if limit <= bound && leave.is_none_or(|lp| alpha[p].abs() > alpha[lp].abs()) {
                                leave = Some(p);
                            }
                        }
                    }
                    theta = leave.and_then(|p| limit_of(p, 0.0)).unwrap_or(f64::INFINITY);
                }
            }
            let span = self.hi[q] - self.lo[q];
            if span.is_finite() && span <= theta {
                // bound flip, no basis change
                let step = dir * span;
                for (p, &a) in alpha.iter().enumerate() {
                    if a != 0.0 {
                        let k = self.head[p];
                        self.x[k] -= step * a;
                    }
                }
                if dir > 0.0 {
                    self.state[q] = State::Upper;
                    self.x[q] = self.hi[q];
                } else {
                    self.state[q] = State::Lower;
                    self.x[q] = self.lo[q];
                }
                self.degenerate_run = 0;
                continue;
            }
            let Some(r) = leave else {
                return Err(LpError::Unbounded);
            };
            if theta <= 1e-12 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            let step = dir * theta;
            for (p, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let k = self.head[p];
                    self.x[k] -= step * a;
                }
            }
            self.x[q] += step;
            let leaving = self.head[r];
            // snap the leaving variable onto the bound it hit
            let rate = -dir * alpha[r];
            self.x[leaving] = if rate < 0.0 { self.lo[leaving] } else { self.hi[leaving] };
            let prow = self.pivot_row(r);
            self.update_devex(q, leaving, alpha[r], &prow);
            self.pivot(r, q, &alpha, &prow);
        }
    }

    fn update_devex(&mut self, q: usize, leaving: usize, pivot: f64, prow: &[f64]) {
        let wq = self.devex[q];
        for (j, &a) in prow.iter().enumerate() {
            if a != 0.0 && !matches!(self.state[j], State::Basic(_)) && j != q {
                let r = a / pivot;
                let cand = r * r * wq;
                if cand > self.devex[j] {
                    self.devex[j] = cand;
                }
            }
        }
        self.devex[leaving] = (wq / (pivot * pivot)).max(1.0);
        if self.devex[leaving] > 1e6 {
            // reset the reference framework when weights blow up
            self.devex.iter_mut().for_each(|w| *w = 1.0);
        }
    }

    fn dual_phase(&mut self) -> Result<(), LpError> {
        loop {
            self.tick()?;
            if self.repaired {
                return Ok(());
            }
            let bland = self.degenerate_run >= BLAND_AFTER;
            let mut best: Option<(usize, f64)> = None;
            for (p, &k) in self.head.iter().enumerate() {
                let infeas = if self.x[k] < self.lo[k] - PRIMAL_TOL {
                    self.lo[k] - self.x[k]
                } else if self.x[k] > self.hi[k] + PRIMAL_TOL {
                    self.x[k] - self.hi[k]
                } else {
                    continue;
                };
                let infeas = infeas * infeas / self.row_norms[p].max(1e-12);
                let better = match best {
                    None => true,
                    Some((bp, bi)) => {
                        if bland {
                            k < self.head[bp]
                        } else {
                            infeas > bi
                        }
                    }
                };
                if better {
                    best = Some((p, infeas));
                }
            }
            let Some((r, _)) = best else {
                return Ok(());
            };
            let leaving = self.head[r];
            let to_lower = self.x[leaving] < self.lo[leaving];
            let prow = self.pivot_row(r);
            let eligible = |k: usize| -> bool {
                let a = prow[k];
                if a.abs() <= PIVOT_TOL || self.lo[k] == self.hi[k] {
                    return false;
                }
                match self.state[k] {
                    State::Basic(_) => false,
                    State::Lower => (to_lower && a < 0.0) || (!to_lower && a > 0.0),
                    State::Upper => (to_lower && a > 0.0) || (!to_lower && a < 0.0),
                    State::Zero => true,
                }
            };
            let mut enter: Option<(usize, f64)> = None;
            if bland {
                for k in (0..self.nvars()).filter(|&k| eligible(k)) {
                    let ratio = self.d[k].abs() / prow[k].abs();
                    if enter.is_none_or(|(_, br)| ratio < br - 1e-12) {
                        enter = Some((k, ratio));
                    }
                }
            } else {
                // Harris: relaxed bound first, then the largest pivot within it
                let bound = (0..self.nvars())
                    .filter(|&k| eligible(k))
                    .map(|k| (self.d[k].abs() + DUAL_TOL) / prow[k].abs())
                    .fold(f64::INFINITY, f64::min);
                for k in (0..self.nvars()).filter(|&k| eligible(k)) {
                    let ratio = self.d[k].abs() / prow[k].abs();
                    if ratio <= bound && enter.is_none_or(|(bk, _)| prow[k].abs() > prow[bk].abs()) {
                        enter = Some((k, ratio));
                    }
                }
            }
            let Some((q, ratio)) = enter else {
                return Err(LpError::Infeasible);
            };
            if ratio <= 1e-12 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            let alpha = self.ftran(q);
            if alpha[r].abs() <= PIVOT_TOL {
                // the row and column computations disagree; rebuild and retry
                self.reinvert()?;
                self.recompute();
                if self.repaired {
                    return Ok(());
                }
                continue;
            }
            let bound = if to_lower { self.lo[leaving] } else { self.hi[leaving] };
            let step = (self.x[leaving] - bound) / alpha[r];
            for (p, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let k = self.head[p];
                    self.x[k] -= step * a;
                }
            }
            self.x[q] += step;
            self.x[leaving] = bound;
            self.pivot(r, q, &alpha, &prow);
        }
    }

    /// Structural values, objective, row duals and reduced costs, reported in
    /// the direction of the original objective.
    pub(crate) fn solution(&self, direction: Direction) -> LpSolution {
        let sign = match direction {
            Direction::Minimize => 1.0,
            Direction::Maximize => -1.0,
        };
        let m = self.m;
        let x = self.x[m..].to_vec();
        let objective = sign * x.iter().zip(&self.cost[m..]).map(|(a, c)| a * c).sum::<f64>();
        LpSolution {
            x,
            objective,
            duals: self.pi.iter().map(|p| sign * p).collect(),
            reduced_costs: self.d[m..].iter().map(|d| sign * d).collect(),
            iterations: self.iterations,
            exact: None,
        }
    }

    /// Internal-sense row duals.
    pub(crate) fn row_duals(&self) -> &[f64] {
        &self.pi
    }

    pub(crate) fn structural_values(&self) -> &[f64] {
        &self.x[self.m..]
    }

    pub(crate) fn iterations(&self) -> usize {
        self.iterations
    }

    /// Re-solves the final basis in rational arithmetic.
    pub(crate) fn verify_exact(&self, direction: Direction) -> Option<ExactSolution> {
        if self.artificial.iter().any(|&a| a) {
            return None;
        }
        let m = self.m;
        let columns: Vec<Vec<(usize, f64)>> = (0..self.nvars())
            .map(|k| {
                let mut c = Vec::new();
                self.for_col(k, |i, a| c.push((i, a)));
                c
            })
            .collect();
        let nonbasic: Vec<(usize, f64, i8)> = (0..self.nvars())
            .filter_map(|k| match self.state[k] {
                State::Basic(_) => None,
                State::Lower => Some((k, self.lo[k], 1)),
                State::Upper => Some((k, self.hi[k], -1)),
                State::Zero => Some((k, 0.0, 0)),
            })
            .collect();
        let mut sol = verify_basis(m, &columns, &self.cost, &self.lo, &self.hi, &self.head, &nonbasic)?;
        if direction == Direction::Maximize {
            sol.objective = -sol.objective;
        }
        Some(sol)
    }
}

/// Columns without a usable pivot and the rows left uncovered by them.
#[derive(Debug)]
struct Dependent {
    columns: Vec<usize>,
    rows: Vec<usize>,
}

/// Gauss–Jordan inversion with partial pivoting. A singular matrix reports
/// its dependent columns and unpivoted rows instead.
fn invert_dense(a: &mut [f64], n: usize) -> Result<Vec<f64>, Dependent> {
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    // pivot_row[c] = row holding the pivot of column c
    let mut pivot_row = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut dependent = Vec::new();
    for c in 0..n {
        let mut piv = usize::MAX;
        let mut best = SINGULAR_TOL;
        for r in 0..n {
            let v = a[r * n + c].abs();
            if !used[r] && v > best {
                best = v;
                piv = r;
            }
        }
        if piv == usize::MAX {
            dependent.push(c);
            continue;
        }
        used[piv] = true;
        pivot_row[c] = piv;
        let p = a[piv * n + c];
        for j in 0..n {
            a[piv * n + j] /= p;
            inv[piv * n + j] /= p;
        }
        for r in 0..n {
            if r == piv {
                continue;
            }
            let f = a[r * n + c];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                a[r * n + j] -= f * a[piv * n + j];
                inv[r * n + j] -= f * inv[piv * n + j];
            }
        }
    }
    if !dependent.is_empty() {
        return Err(Dependent {
            columns: dependent,
            rows: (0..n).filter(|&r| !used[r]).collect(),
        });
    }
    // row `pivot_row[c]` of `inv` is row `c` of the inverse
    let mut out = vec![0.0; n * n];
    for c in 0..n {
        let r = pivot_row[c];
        out[c * n..(c + 1) * n].copy_from_slice(&inv[r * n..(r + 1) * n]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_inverse() {
        let mut a = vec![2.0, 1.0, 1.0, 3.0];
        let inv = invert_dense(&mut a, 2).unwrap();
        let expect = [0.6, -0.2, -0.2, 0.4];
        for (x, e) in inv.iter().zip(expect) {
            assert!((x - e).abs() < 1e-12);
        }
        let mut s = vec![1.0, 2.0, 2.0, 4.0];
        let dep = invert_dense(&mut s, 2).unwrap_err();
        assert_eq!(dep.columns, vec![1]);
        assert_eq!(dep.rows.len(), 1);
    }

    #[test]
    fn reinversion_matches_updates() {
        let mut lp = LinearProgram::new(Direction::Maximize, vec![1.0, 2.0, 1.5]);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Sense::Le, 4.0);
        lp.add_constraint(vec![(1, 1.0), (2, 2.0)], Sense::Le, 5.0);
        lp.add_constraint(vec![(0, 3.0), (2, 1.0)], Sense::Le, 7.0);
        let mut s = Simplex::from_lp(&lp);
        s.solve().unwrap();
        let before = s.binv.clone();
        s.reinvert().unwrap();
        for (a, b) in before.iter().zip(&s.binv) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn column_generation_warm_start() {
        // max w0 + w1 s.t. w0 ≤ 1, w1 ≤ 1 as rows, then add a column covering both rows
        let mut lp = LinearProgram::new(Direction::Maximize, vec![1.0]);
        lp.add_constraint(vec![(0, 1.0)], Sense::Le, 1.0);
        lp.add_constraint(vec![], Sense::Le, 1.0);
        let mut s = Simplex::from_lp(&lp);
        s.solve().unwrap();
        assert!((s.solution(Direction::Maximize).objective - 1.0).abs() < 1e-12);
        s.add_column(-1.0, vec![(1, 1.0)], 0.0, f64::INFINITY);
        s.solve().unwrap();
        let sol = s.solution(Direction::Maximize);
        assert!((sol.objective - 2.0).abs() < 1e-12);
        assert_eq!(s.num_structural(), 2);
    }

    #[test]
    fn singular_basis_is_repaired() {
        let mut lp = LinearProgram::new(Direction::Minimize, vec![1.0, 1.0]);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Sense::Ge, 1.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Sense::Ge, 1.0);
        let mut s = Simplex::from_lp(&lp);
        s.head = vec![2, 3];
        s.state[0] = State::Lower;
        s.state[1] = State::Lower;
        s.state[2] = State::Basic(0);
        s.state[3] = State::Basic(1);
        s.reinvert().unwrap();
        assert!(s.repaired);
        assert_eq!(s.head.iter().filter(|&&k| k < 2).count(), 1);
        s.solve().unwrap();
        assert!((s.solution(Direction::Minimize).objective - 1.0).abs() < 1e-12);
    }
}

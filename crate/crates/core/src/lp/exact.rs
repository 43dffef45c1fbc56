//! Rational re-solve of a simplex basis. Floating-point pivoting picks the
//! basis; this module recomputes the basic solution and the duals in exact
//! arithmetic and accepts the basis only if it is primal and dual feasible
//! without any tolerance.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub objective: BigRational,
    /// Structural variable values.
    pub x: Vec<BigRational>,
}

impl ExactSolution {
    pub fn objective_f64(&self) -> f64 {
        super::rational_to_f64(&self.objective)
    }
}

fn rat(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite value")
}

/// Solves `M z = b` for square `M` (row-major); `None` if singular.
fn solve(mut m: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).find(|&r| !m[r][c].is_zero())?;
        m.swap(c, piv);
        b.swap(c, piv);
        let p = m[c][c].clone();
        for j in c..n {
            m[c][j] = &m[c][j] / &p;
        }
        b[c] = &b[c] / &p;
        for r in 0..n {
            if r == c || m[r][c].is_zero() {
                continue;
            }
            let f = m[r][c].clone();
            for j in c..n {
                let t = &f * &m[c][j];
                m[r][j] -= t;
            }
            let t = &f * &b[c];
            b[r] -= t;
        }
    }
    Some(b)
}

/// `columns` lists every variable's sparse column (logicals first), `cost`
/// the internal minimization cost, `nonbasic` the `(variable, value, side)`
/// triples with side `1` at lower, `-1` at upper, `0` free.
pub(crate) fn verify_basis(
    m: usize,
    columns: &[Vec<(usize, f64)>],
    cost: &[f64],
    lo: &[f64],
    hi: &[f64],
    head: &[usize],
    nonbasic: &[(usize, f64, i8)],
) -> Option<ExactSolution> {
    let zero = BigRational::zero();
    let mut basis = vec![vec![zero.clone(); m]; m];
    for (p, &k) in head.iter().enumerate() {
        for &(i, a) in &columns[k] {
            basis[i][p] = rat(a);
        }
    }
    let mut rhs = vec![zero.clone(); m];
    let mut values: Vec<BigRational> = vec![zero.clone(); columns.len()];
    for &(k, v, _) in nonbasic {
        let v = rat(v);
        for &(i, a) in &columns[k] {
            rhs[i] -= rat(a) * &v;
        }
        values[k] = v;
    }
    let xb = solve(basis.clone(), rhs)?;
    for (p, &k) in head.iter().enumerate() {
        if lo[k].is_finite() && xb[p] < rat(lo[k]) {
            return None;
        }
        if hi[k].is_finite() && xb[p] > rat(hi[k]) {
            return None;
        }
        values[k] = xb[p].clone();
    }
    // Bᵀ π = c_B
    let transposed: Vec<Vec<BigRational>> =
        (0..m).map(|p| (0..m).map(|i| basis[i][p].clone()).collect()).collect();
    let cb: Vec<BigRational> = head.iter().map(|&k| rat(cost[k])).collect();
    let pi = solve(transposed, cb)?;
    for &(k, _, side) in nonbasic {
        if lo[k] == hi[k] {
            continue;
        }
        let mut d = rat(cost[k]);
        for &(i, a) in &columns[k] {
            d -= &pi[i] * rat(a);
        }
        let ok = match side {
            1 => !d.is_negative(),
            -1 => !d.is_positive(),
            _ => d.is_zero(),
        };
        if !ok {
            return None;
        }
    }
    let mut objective = zero;
    for k in m..columns.len() {
        objective += rat(cost[k]) * &values[k];
    }
    Some(ExactSolution {
        objective,
        x: values.split_off(m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn ratio(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn rational_solve() {
        let m = vec![vec![rat(2.0), rat(1.0)], vec![rat(1.0), rat(3.0)]];
        let z = solve(m, vec![rat(1.0), rat(2.0)]).unwrap();
        assert_eq!(z, vec![ratio(1, 5), ratio(3, 5)]);
        let s = vec![vec![rat(1.0), rat(2.0)], vec![rat(2.0), rat(4.0)]];
        assert!(solve(s, vec![rat(1.0), rat(1.0)]).is_none());
    }
}

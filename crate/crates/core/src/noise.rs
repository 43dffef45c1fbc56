//! Integer noise: discrete Laplace, negative binomial, and the symmetric
//! negative binomial `NB − NB`, with certified pmfs and seeded samplers.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// Tail mass allowed beyond the window on each side.
pub const TAIL_BOUND: f64 = 1e-13;

/// Above this many inner products the symmetric pmf is computed by a stable
/// backward recurrence instead of direct convolution.
const CONVOLUTION_BUDGET: usize = 4_000_000;

#[derive(Debug, thiserror::Error)]
pub enum NoiseError {
    #[error("invalid noise parameter: {0}")]
    InvalidParameter(String),
    #[error("window [{lo}, {hi}] does not contain the certified window [{need_lo}, {need_hi}]")]
    WindowTooSmall { lo: i64, hi: i64, need_lo: i64, need_hi: i64 },
    #[error("privacy ratio needs shape r >= 1, got {0}")]
    ShapeBelowOne(f64),
}

/// A noise distribution over the integers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseDist {
    /// `Pr[k] ∝ exp(−|k|/b)`.
    DLap { b: f64 },
    /// Failures before the `r`-th success, success probability `p`.
    NB { r: f64, p: f64 },
    /// Difference of two independent `NB(r, p)` draws.
    SNB { r: f64, p: f64 },
    PointMassZero,
}

impl NoiseDist {
    pub fn dlap(b: f64) -> Result<Self, NoiseError> {
        let d = NoiseDist::DLap { b };
        d.validate()?;
        Ok(d)
    }

    pub fn nb(r: f64, p: f64) -> Result<Self, NoiseError> {
        let d = NoiseDist::NB { r, p };
        d.validate()?;
        Ok(d)
    }

    /// `sNB(0, p)` collapses to the point mass at zero.
    pub fn snb(r: f64, p: f64) -> Result<Self, NoiseError> {
        let d = NoiseDist::SNB { r, p };
        d.validate()?;
        Ok(if r == 0.0 { NoiseDist::PointMassZero } else { d })
    }

    /// `sNB(r, 1 − e^{−ε/Δ})`, the per-party noise of the share protocols.
    pub fn snb_for_budget(r: f64, eps: f64, delta_sens: u64) -> Result<Self, NoiseError> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(NoiseError::InvalidParameter(format!("epsilon must be positive, got {eps}")));
        }
        if delta_sens == 0 {
            return Err(NoiseError::InvalidParameter("sensitivity must be at least 1".into()));
        }
        Self::snb(r, success_prob(eps, delta_sens))
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        let bad = |m: String| Err(NoiseError::InvalidParameter(m));
        match *self {
            NoiseDist::DLap { b } if !(b > 0.0 && b.is_finite()) => bad(format!("scale b must be positive, got {b}")),
            NoiseDist::NB { r, p } | NoiseDist::SNB { r, p } => {
                if !(r >= 0.0 && r.is_finite()) {
                    bad(format!("shape r must be nonnegative, got {r}"))
                } else if !(p > 0.0 && p < 1.0) {
                    bad(format!("p must lie in (0, 1), got {p}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    fn is_point_mass(&self) -> bool {
        match *self {
            NoiseDist::PointMassZero => true,
            NoiseDist::NB { r, .. } | NoiseDist::SNB { r, .. } => r == 0.0,
            NoiseDist::DLap { .. } => false,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            NoiseDist::NB { r, p } => r * (1.0 - p) / p,
            _ => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseDist::DLap { b } => {
                let e = (-1.0 / b).exp();
                2.0 * e / (-(-1.0 / b).exp_m1()).powi(2)
            }
            NoiseDist::NB { r, p } => r * (1.0 - p) / (p * p),
            NoiseDist::SNB { r, p } => 2.0 * r * (1.0 - p) / (p * p),
            NoiseDist::PointMassZero => 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        match *self {
            NoiseDist::PointMassZero => 0,
            NoiseDist::NB { r, p } => sample_nb(r, p, rng),
            NoiseDist::SNB { r, p } => sample_nb(r, p, rng) - sample_nb(r, p, rng),
            NoiseDist::DLap { b } => {
                let p = -(-1.0 / b).exp_m1();
                sample_nb(1.0, p, rng) - sample_nb(1.0, p, rng)
            }
        }
    }

    /// Smallest window whose complement has certified mass below the bound.
    pub fn certified_window(&self) -> RangeInclusive<i64> {
        match *self {
            _ if self.is_point_mass() => 0..=0,
            NoiseDist::NB { r, p } => 0..=nb_window(r, p),
            NoiseDist::SNB { r, p } => {
                let w = nb_window(r, p);
                -w..=w
            }
            NoiseDist::DLap { b } => {
                let w = nb_window(1.0, -(-1.0 / b).exp_m1());
                -w..=w
            }
            NoiseDist::PointMassZero => 0..=0,
        }
    }

    pub fn certified_pmf(&self) -> Pmf {
        self.pmf(self.certified_window()).expect("certified window always suffices")
    }

    /// Masses on `window`, which must contain the certified window.
    pub fn pmf(&self, window: RangeInclusive<i64>) -> Result<Pmf, NoiseError> {
        self.validate()?;
        let need = self.certified_window();
        let (lo, hi) = (*window.start(), *window.end());
        if lo > *need.start() || hi < *need.end() {
            return Err(NoiseError::WindowTooSmall {
                lo,
                hi,
                need_lo: *need.start(),
                need_hi: *need.end(),
            });
        }
        let len = (hi - lo + 1) as usize;
        let mut masses = vec![0.0; len];
        let truncation_mass = match *self {
            _ if self.is_point_mass() => {
                masses[(-lo) as usize] = 1.0;
                0.0
            }
            NoiseDist::NB { r, p } => {
                for k in lo.max(0)..=hi {
                    masses[(k - lo) as usize] = nb_log_pmf(k as u64, r, p).exp();
                }
                nb_tail_bound(hi as u64, r, p)
            }
            NoiseDist::SNB { r, p } => {
                let reach = lo.unsigned_abs().max(hi.unsigned_abs());
                let half = snb_half(r, p, reach, need.end().unsigned_abs());
                for k in lo..=hi {
                    masses[(k - lo) as usize] = half[k.unsigned_abs() as usize];
                }
                let w = lo.unsigned_abs().min(hi.unsigned_abs());
                3.0 * nb_tail_bound(w, r, p)
            }
            NoiseDist::DLap { b } => {
                let c = -(-1.0 / b).exp_m1() / (1.0 + (-1.0 / b).exp());
                for k in lo..=hi {
                    masses[(k - lo) as usize] = c * (-(k.unsigned_abs() as f64) / b).exp();
                }
                let below = (-((lo.unsigned_abs() + 1) as f64) / b).exp();
                let above = (-((hi.unsigned_abs() + 1) as f64) / b).exp();
                (below + above) / (1.0 + (-1.0 / b).exp())
            }
            NoiseDist::PointMassZero => unreachable!("handled above"),
        };
        Ok(Pmf {
            offset: lo,
            masses,
            truncation_mass,
        })
    }
}

/// `1 − e^{−ε/Δ}`, computed without cancellation.
pub fn success_prob(eps: f64, delta_sens: u64) -> f64 {
    -(-eps / delta_sens as f64).exp_m1()
}

fn sample_nb<R: Rng + ?Sized>(r: f64, p: f64, rng: &mut R) -> i64 {
    if r == 0.0 {
        return 0;
    }
    let gamma = Gamma::new(r, (1.0 - p) / p).expect("validated gamma parameters");
    let lambda: f64 = gamma.sample(rng);
    if !(lambda > 0.0) {
        return 0;
    }
    let poisson = Poisson::new(lambda).expect("positive finite rate");
    poisson.sample(rng) as i64
}

/// Log of the NB pmf at `k`, valid for real `r > 0`.
fn nb_log_pmf(k: u64, r: f64, p: f64) -> f64 {
    let k = k as f64;
    ln_gamma(k + r) - ln_gamma(k + 1.0) - ln_gamma(r) + k * (1.0 - p).ln() + r * p.ln()
}

/// Rigorous upper bound on `Pr[X > w]` for `X ∼ NB(r, p)`: the pmf ratio
/// `f(k+1)/f(k) = q(k+r)/(k+1)` is bounded for `k > w`, so the tail is at
/// most a geometric series started at `f(w+1)`.
fn nb_tail_bound(w: u64, r: f64, p: f64) -> f64 {
    let q = 1.0 - p;
    let k = (w + 1) as f64;
    let ratio = if r >= 1.0 { q * (k + r) / (k + 1.0) } else { q };
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    nb_log_pmf(w + 1, r, p).exp() / (1.0 - ratio)
}

/// Smallest `w` past the mode with `Pr[X > w] ≤ TAIL_BOUND` (certified).
fn nb_window(r: f64, p: f64) -> i64 {
    let q = 1.0 - p;
    let mode = if r > 1.0 { ((r - 1.0) * q / p).floor() as u64 } else { 0 };
    let ok = |w: u64| nb_tail_bound(w, r, p) <= TAIL_BOUND;
    if ok(mode) {
        return mode as i64;
    }
    let mut lo = mode;
    let mut step = 1u64.max((r.max(1.0) / p) as u64 / 8);
    let mut hi = mode + step;
    while !ok(hi) {
        lo = hi;
        step *= 2;
        hi += step;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi as i64
}

/// `g(k)` for `0 ≤ k ≤ reach`, where `g` is the pmf of `NB(r,p) − NB(r,p)`.
fn snb_half(r: f64, p: f64, reach: u64, certified: u64) -> Vec<f64> {
    let inner = certified.max(reach);
    if (reach as usize + 1).saturating_mul(inner as usize + 1) <= CONVOLUTION_BUDGET {
        snb_half_convolution(r, p, reach, inner)
    } else {
        snb_half_recurrence(r, p, reach)
    }
}

/// Direct windowed convolution `g(k) = Σ_{j ≤ inner} f(j) f(j+k)`.
fn snb_half_convolution(r: f64, p: f64, reach: u64, inner: u64) -> Vec<f64> {
    let f: Vec<f64> = (0..=reach + inner).map(|k| nb_log_pmf(k, r, p).exp()).collect();
    (0..=reach as usize)
        .map(|k| {
            let mut s = 0.0;
            // smallest terms first
            for j in (0..=inner as usize).rev() {
                s += f[j] * f[j + k];
            }
            s
        })
        .collect()
}

/// Backward (Miller) recurrence for the symmetric pmf.
///
/// The generating function `p^{2r}(1−qs)^{−r}(1−q/s)^{−r}` satisfies a
/// first-order ODE whose coefficients give the three-term relation
/// `q(m+r−2) g(m−2) = (1+q²)(m−1) g(m−1) − q(m−r) g(m)`. The pmf is its
/// minimal solution, so running the relation downward from a point far past
/// the window and normalizing by total mass is numerically stable.
fn snb_half_recurrence(r: f64, p: f64, reach: u64) -> Vec<f64> {
    let q = 1.0 - p;
    let q2 = q * q;
    // starting error decays like q^{2·extra}
    let extra = (40.0 / (-2.0 * q.ln())).ceil() as u64 + 16;
    let top = (reach + extra) as usize;
    let mut g = vec![0.0f64; top + 2];
    g[top] = 1e-280;
    for m in (2..=top + 1).rev() {
        let mf = m as f64;
        let val = ((1.0 + q2) * (mf - 1.0) * g[m - 1] - q * (mf - r) * g[m]) / (q * (mf + r - 2.0));
        g[m - 2] = val;
        if val.abs() > 1e280 {
            for v in &mut g[m - 2..] {
                *v *= 1e-280;
            }
        }
    }
    let total = g[0] + 2.0 * g[1..].iter().rev().sum::<f64>();
    g.truncate(reach as usize + 1);
    for v in &mut g {
        *v /= total;
    }
    g
}

/// Finite-window probability mass function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    /// Integer value of `masses[0]`.
    pub offset: i64,
    pub masses: Vec<f64>,
    /// Certified upper bound on the probability outside the window.
    pub truncation_mass: f64,
}

impl Pmf {
    pub fn window(&self) -> RangeInclusive<i64> {
        self.offset..=self.offset + self.masses.len() as i64 - 1
    }

    pub fn mass(&self, k: i64) -> f64 {
        let i = k - self.offset;
        if i < 0 || i >= self.masses.len() as i64 {
            0.0
        } else {
            self.masses[i as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().rev().sum()
    }

    pub fn mean(&self) -> f64 {
        self.window().map(|k| k as f64 * self.mass(k)).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.window().map(|k| (k as f64 - mu).powi(2) * self.mass(k)).sum()
    }

    /// Total variation distance over the union of both windows.
    pub fn tv_distance(&self, other: &Pmf) -> f64 {
        let lo = self.offset.min(other.offset);
        let hi = (*self.window().end()).max(*other.window().end());
        0.5 * (lo..=hi).map(|k| (self.mass(k) - other.mass(k)).abs()).sum::<f64>()
    }

    /// `max_k |ln P(k) − ln P(k + s)|` over `1 ≤ s ≤ max_shift`, restricted
    /// to points where both masses are positive.
    pub fn max_shift_log_ratio(&self, max_shift: u64) -> f64 {
        let logs: Vec<f64> = self.masses.iter().map(|m| m.ln()).collect();
        let mut worst = 0.0f64;
        for s in 1..=max_shift as usize {
            for i in 0..logs.len().saturating_sub(s) {
                let (a, b) = (logs[i], logs[i + s]);
                if a.is_finite() && b.is_finite() {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }

    /// `k,mass` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,mass\n");
        for k in self.window() {
            let _ = writeln!(out, "{k},{:e}", self.mass(k));
        }
        out
    }
}

pub fn pmf(dist: &NoiseDist, window: RangeInclusive<i64>) -> Result<Pmf, NoiseError> {
    dist.pmf(window)
}

pub fn sample<R: Rng + ?Sized>(dist: &NoiseDist, rng: &mut R) -> i64 {
    dist.sample(rng)
}

pub fn variance(dist: &NoiseDist) -> f64 {
    dist.variance()
}

/// Worst log-ratio between `Z + x` and `Z + x'` over `x, x' ∈ {0..Δ}` for
/// `Z ∼ sNB(r, 1 − e^{−ε/Δ})`, scanned over the certified window.
pub fn privacy_ratio(r: f64, eps: f64, delta_sens: u64) -> Result<f64, NoiseError> {
    if r < 1.0 {
        return Err(NoiseError::ShapeBelowOne(r));
    }
    shifted_log_ratio(r, eps, delta_sens)
}

/// Same scan without the shape precondition; used by audits that must report
/// (rather than reject) insufficient noise.
pub(crate) fn shifted_log_ratio(r: f64, eps: f64, delta_sens: u64) -> Result<f64, NoiseError> {
    let dist = NoiseDist::snb_for_budget(r, eps, delta_sens)?;
    if matches!(dist, NoiseDist::PointMassZero) {
        return Ok(f64::INFINITY);
    }
    Ok(dist.certified_pmf().max_shift_log_ratio(delta_sens))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn dlap_center_mass() {
        let e = (-1.0f64).exp();
        let expect = (1.0 - e) / (1.0 + e);
        let d = NoiseDist::dlap(1.0).unwrap().certified_pmf();
        assert!((d.mass(0) - expect).abs() < 1e-15);
        assert!((expect - 0.462117).abs() < 1e-6);
        let s = NoiseDist::snb(1.0, 1.0 - e).unwrap().certified_pmf();
        assert!((s.mass(0) - expect).abs() < 1e-14);
    }

    #[test]
    fn zero_shape_is_point_mass() {
        let d = NoiseDist::snb(0.0, 0.3).unwrap();
        assert_eq!(d, NoiseDist::PointMassZero);
        let pmf = d.certified_pmf();
        assert_eq!(pmf.mass(0), 1.0);
        assert_eq!(pmf.truncation_mass, 0.0);
        let mut rng = seeded(1);
        assert!((0..100).all(|_| d.sample(&mut rng) == 0));
        assert_eq!(d.variance(), 0.0);
    }

    #[test]
    fn variances_closed_form() {
        assert_eq!(NoiseDist::nb(2.0, 0.5).unwrap().variance(), 4.0);
        let e = (-1.0f64).exp();
        let v = NoiseDist::snb(1.0, 1.0 - e).unwrap().variance();
        assert!((v - 2.0 * e / (1.0 - e).powi(2)).abs() < 1e-12);
        assert!((v - 1.841347).abs() < 1e-6);
        assert!((NoiseDist::dlap(1.0).unwrap().variance() - v).abs() < 1e-12);
    }

    #[test]
    fn pmf_variance_matches_closed_form() {
        for d in [NoiseDist::nb(2.5, 0.3).unwrap(), NoiseDist::snb(1.7, 0.2).unwrap(), NoiseDist::dlap(3.0).unwrap()] {
            let pmf = d.certified_pmf();
            assert!((pmf.variance() - d.variance()).abs() < 1e-8 * d.variance());
            assert!((pmf.total() + pmf.truncation_mass - 1.0).abs() < 1e-12);
            assert!(pmf.truncation_mass <= 1e-12);
        }
    }

    #[test]
    fn window_must_cover_certified_range() {
        let d = NoiseDist::snb(1.0, 0.5).unwrap();
        let need = d.certified_window();
        let err = d.pmf(-1..=1).unwrap_err();
        match err {
            NoiseError::WindowTooSmall { need_lo, need_hi, .. } => {
                assert_eq!(need_lo..=need_hi, need);
            }
            other => panic!("{other:?}"),
        }
        let wide = d.pmf(need.start() - 5..=need.end() + 5).unwrap();
        assert!((wide.mass(0) - d.certified_pmf().mass(0)).abs() < 1e-16);
    }

    #[test]
    fn invalid_parameters() {
        assert!(NoiseDist::dlap(0.0).is_err());
        assert!(NoiseDist::nb(-1.0, 0.5).is_err());
        assert!(NoiseDist::snb(1.0, 1.0).is_err());
        assert!(NoiseDist::snb_for_budget(1.0, 0.0, 1).is_err());
        assert!(NoiseDist::snb_for_budget(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn recurrence_agrees_with_convolution() {
        for (r, p) in [(0.3, 0.2), (1.0, 0.05), (2.5, 0.1), (7.0, 0.3), (12.0, 0.02)] {
            let w = nb_window(r, p) as u64;
            let a = snb_half_convolution(r, p, w, w);
            let b = snb_half_recurrence(r, p, w);
            for k in 0..=w as usize {
                let rel = (a[k] - b[k]).abs() / a[k];
                assert!(rel < 1e-10, "r={r} p={p} k={k} rel={rel}");
            }
        }
    }

    #[test]
    fn privacy_ratio_examples() {
        let r1 = privacy_ratio(1.0, 1.0, 1).unwrap();
        assert!((r1 - 1.0).abs() < 1e-9, "{r1}");
        assert!(privacy_ratio(2.0, 1.0, 1).unwrap() <= 1.0 + 1e-9);
        assert!(privacy_ratio(1.0, 0.5, 4).unwrap() <= 0.5 + 1e-9);
        assert!(matches!(privacy_ratio(0.5, 1.0, 1), Err(NoiseError::ShapeBelowOne(_))));
    }

    #[test]
    fn csv_export() {
        let csv = NoiseDist::nb(1.0, 0.9).unwrap().certified_pmf().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("k,mass"));
        assert!(lines.next().unwrap().starts_with("0,9"));
    }
}

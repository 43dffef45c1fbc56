//! Privacy certification and utility measurement.
//!
//! [`exact_statistic_audit`] certifies, per vertex, the max log-ratio of the
//! noisy sufficient statistic `x_v + Σ z_u` that the outside view is a
//! post-processing of. [`monte_carlo_view_audit`] estimates leakage end to
//! end on tiny instances by recomputing that statistic from an adversary's
//! extracted view. [`empirical_mse`] measures accuracy against closed forms.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{make_threshold, GraphError, ThresholdVector, TrustGraph};
use crate::lp::{solve_cover, solve_robust_cover, FractionalCover, LpError};
use crate::noise::{shifted_log_ratio, success_prob, NoiseDist, NoiseError};
use crate::protocol::{
    extract_view, real_aggregate, run_domset_protocol, run_lp_protocol, run_robust_protocol,
    run_vecsum_protocol, Dest, NoiseMode, Payload, ProtocolError, ProtocolKind, Transcript,
};
use crate::rng::substream;

/// Slack on the exact path.
pub const AUDIT_TOL: f64 = 1e-9;
/// Slack on the Monte-Carlo estimate.
pub const MC_SLACK: f64 = 0.1;
pub const MC_MAX_VERTICES: usize = 5;
/// Fewer trials per histogram bin than this is rejected.
pub const MC_MIN_TRIALS_PER_BIN: usize = 100;

pub const MC_CAVEAT: &str =
    "statistical lower estimate of leakage from sampled views, not a certificate";

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("monte-carlo audit needs n <= {cap}, graph has n = {n}; use the exact audit")]
    TooLarge { n: usize, cap: usize },
    #[error("view alphabet of {bins} bins needs at least {needed} trials, got {trials}; use the exact audit")]
    AlphabetTooLarge { bins: usize, trials: usize, needed: usize },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditMethod {
    ExactStatistic,
    MonteCarloView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub vertex: usize,
    /// Neighbors assumed to have joined the adversary.
    pub excluded: Vec<usize>,
    /// Noise mass `Σ y_u` over `N[v] ∖ T`.
    pub mass: f64,
    /// Certified (or estimated) max log-ratio; infinite when unbounded.
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub method: AuditMethod,
    pub eps: f64,
    pub tolerance: f64,
    pub entries: Vec<AuditEntry>,
    pub pass: bool,
    /// Vertex with the largest ratio.
    pub worst_vertex: Option<usize>,
    pub worst_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Set when the two histograms had disjoint supports.
    #[serde(default)]
    pub unbounded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
}

impl AuditReport {
    fn assemble(method: AuditMethod, eps: f64, tolerance: f64, entries: Vec<AuditEntry>) -> Self {
        let worst = entries.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio));
        Self {
            method,
            eps,
            tolerance,
            pass: entries.iter().all(|e| e.pass),
            worst_vertex: worst.map(|e| e.vertex),
            worst_ratio: worst.map_or(0.0, |e| e.ratio),
            entries,
            trials: None,
            unbounded: false,
            caveat: None,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report json is always serializable")
    }

    /// Columns: `vertex,excluded,mass,ratio,eps,pass`, exclusions joined by `;`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("vertex,excluded,mass,ratio,eps,pass\n");
        for e in &self.entries {
            let excl: Vec<String> = e.excluded.iter().map(usize::to_string).collect();
            out += &format!("{},{},{},{},{},{}\n", e.vertex, excl.join(";"), e.mass, e.ratio, self.eps, e.pass);
        }
        out
    }
}

fn check_eps(eps: f64) -> Result<(), AuditError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(AuditError::InvalidParameter(format!("epsilon must be positive, got {eps}")))
    }
}

/// Certifies every vertex: with `T` the `t_v` heaviest neighbors (empty
/// without thresholds), builds the exact pmf of `sNB(R, 1 − e^{−ε/Δ})` for
/// `R = Σ_{u ∈ N[v] ∖ T} y_u` and takes the max log-ratio over shifts
/// `0..=Δ`. A vertex with `R < 1` fails with an infinite ratio when `R = 0`
/// and the computed ratio otherwise.
pub fn exact_statistic_audit(
    g: &TrustGraph,
    cover: &FractionalCover,
    eps: f64,
    delta_sens: u64,
    t: Option<&ThresholdVector>,
) -> Result<AuditReport, AuditError> {
    check_eps(eps)?;
    if delta_sens == 0 {
        return Err(AuditError::InvalidParameter("sensitivity must be at least 1".into()));
    }
    if cover.len() != g.n() {
        return Err(AuditError::InvalidParameter(format!(
            "cover has {} weights for {} vertices",
            cover.len(),
            g.n()
        )));
    }
    if let Some(t) = t {
        t.check_len(g)?;
    }
    let mut cache: HashMap<u64, f64> = HashMap::new();
    let mut entries = Vec::with_capacity(g.n());
    for v in 0..g.n() {
        let t_v = t.map_or(0, |t| t.get(v));
        let (mass, excluded) = cover.residual_mass(g, v, t_v);
        let mass = mass.max(0.0);
        let ratio = match cache.get(&mass.to_bits()) {
            Some(&r) => r,
            None => {
                let r = shifted_log_ratio(mass, eps, delta_sens)?;
                cache.insert(mass.to_bits(), r);
                r
            }
        };
        let pass = mass >= 1.0 - AUDIT_TOL && ratio <= eps + AUDIT_TOL;
        entries.push(AuditEntry {
            vertex: v,
            excluded,
            mass,
            ratio,
            pass,
        });
    }
    Ok(AuditReport::assemble(AuditMethod::ExactStatistic, eps, AUDIT_TOL, entries))
}

/// Settings for [`monte_carlo_view_audit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McAuditConfig {
    /// `Lp` or `Robust`.
    pub kind: ProtocolKind,
    pub eps: f64,
    /// Trials per input setting.
    pub trials: usize,
    pub seed: u64,
    /// Neighbors of the audited vertex that join the adversary.
    #[serde(default)]
    pub excluded: Vec<usize>,
    #[serde(default)]
    pub noise: NoiseMode,
    #[serde(default = "default_slack")]
    pub slack: f64,
}

fn default_slack() -> f64 {
    MC_SLACK
}

impl McAuditConfig {
    pub fn new(kind: ProtocolKind, eps: f64, trials: usize, seed: u64) -> Self {
        Self {
            kind,
            eps,
            trials,
            seed,
            excluded: Vec::new(),
            noise: NoiseMode::Enabled,
            slack: MC_SLACK,
        }
    }
}

/// The adversary's residue `Σ_{u ∉ S} z_u + Σ_{w ∉ S} x_w (mod q)`, assembled
/// only from messages in the view of `S`: outsiders' broadcasts, minus the
/// shares `S` sent to outsiders, plus the shares outsiders sent into `S`.
pub fn view_statistic(tr: &Transcript, adversary: &[usize], n: usize) -> Option<u64> {
    let q = tr.params.q?;
    let view = extract_view(tr, adversary);
    if view.subjects.is_empty() {
        return None;
    }
    let mut inside = vec![false; n];
    for &s in &view.subjects {
        inside[s] = true;
    }
    let mut stat = 0u64;
    for m in &view.messages {
        let Payload::Residue(a) = m.payload else { continue };
        match m.dest {
            Dest::Broadcast if !inside[m.source] => stat = (stat + a) % q,
            Dest::Vertex(d) if inside[m.source] && !inside[d] => stat = (stat + q - a) % q,
            Dest::Vertex(d) if !inside[m.source] && inside[d] => stat = (stat + a) % q,
            _ => {}
        }
    }
    Some(stat)
}

/// Estimates `D_∞` of the adversary's view in `x_v ∈ {0, 1}` by running the
/// protocol `trials` times per setting, histogramming [`view_statistic`]
/// over its `q` residues, and taking the largest add-one-smoothed log-ratio.
/// Two settings of the other inputs (all zero, all one) are probed; the
/// report holds one entry per setting.
pub fn monte_carlo_view_audit(
    g: &TrustGraph,
    cover: &FractionalCover,
    v: usize,
    cfg: &McAuditConfig,
) -> Result<AuditReport, AuditError> {
    check_eps(cfg.eps)?;
    let n = g.n();
    if n > MC_MAX_VERTICES {
        return Err(AuditError::TooLarge { n, cap: MC_MAX_VERTICES });
    }
    if v >= n {
        return Err(GraphError::VertexOutOfRange { vertex: v, n }.into());
    }
    if !matches!(cfg.kind, ProtocolKind::Lp | ProtocolKind::Robust) {
        return Err(AuditError::InvalidParameter(format!(
            "monte-carlo audit supports the lp and robust protocols, not {:?}",
            cfg.kind
        )));
    }
    let mut excluded = cfg.excluded.clone();
    excluded.sort_unstable();
    excluded.dedup();
    if let Some(&u) = excluded.iter().find(|&&u| !g.has_edge(v, u)) {
        return Err(AuditError::InvalidParameter(format!("excluded vertex {u} is not a neighbor of {v}")));
    }
    let q = (2 * n).max(2);
    let needed = q * MC_MIN_TRIALS_PER_BIN;
    if cfg.trials < needed {
        return Err(AuditError::AlphabetTooLarge {
            bins: q,
            trials: cfg.trials,
            needed,
        });
    }
    let protected: Vec<usize> = g
        .closed_unchecked(v)
        .into_iter()
        .filter(|u| excluded.binary_search(u).is_err())
        .collect();
    let adversary: Vec<usize> = (0..n).filter(|u| !protected.contains(u)).collect();
    let mut report_entries = Vec::new();
    let mut unbounded = false;
    for (setting, others) in [0u64, 1].into_iter().enumerate() {
        let ratio = if adversary.is_empty() {
            0.0
        } else {
            let mut hist = [vec![0usize; q], vec![0usize; q]];
            for (side, xv) in [0u64, 1].into_iter().enumerate() {
                let mut x = vec![others; n];
                x[v] = xv;
                let mut rng = substream(cfg.seed, (setting * 2 + side) as u64);
                for _ in 0..cfg.trials {
                    let tr = match cfg.kind {
                        ProtocolKind::Robust => run_robust_protocol(g, cover, &x, cfg.eps, 1, cfg.noise, &mut rng)?,
                        _ => run_lp_protocol(g, cover, &x, cfg.eps, 1, cfg.noise, &mut rng)?,
                    };
                    let stat = view_statistic(&tr, &adversary, n).expect("nonempty adversary");
                    hist[side][stat as usize] += 1;
                }
            }
            if (0..q).all(|b| hist[0][b] == 0 || hist[1][b] == 0) {
                unbounded = true;
                f64::INFINITY
            } else {
                let total = (cfg.trials + q) as f64;
                (0..q)
                    .map(|b| {
                        let p0 = (hist[0][b] + 1) as f64 / total;
                        let p1 = (hist[1][b] + 1) as f64 / total;
                        (p0.ln() - p1.ln()).abs()
                    })
                    .fold(0.0, f64::max)
            }
        };
        let mass = protected.iter().map(|&u| cover.y[u]).sum();
        report_entries.push(AuditEntry {
            vertex: v,
            excluded: excluded.clone(),
            mass,
            ratio,
            pass: ratio <= cfg.eps + cfg.slack,
        });
    }
    let mut report = AuditReport::assemble(AuditMethod::MonteCarloView, cfg.eps, cfg.slack, report_entries);
    report.trials = Some(cfg.trials);
    report.unbounded = unbounded;
    report.caveat = Some(MC_CAVEAT.to_string());
    Ok(report)
}

/// A protocol instance for [`empirical_mse`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mechanism {
    Domset { set: Vec<usize>, eps: f64, delta_sens: u64 },
    Lp { cover: FractionalCover, eps: f64, delta_sens: u64 },
    Robust { cover: FractionalCover, eps: f64, delta_sens: u64 },
    Vecsum { set: Vec<usize>, rho: f64, delta: f64, dim: usize },
    Real { cover: FractionalCover, eps: f64, grid: u64 },
}

impl Mechanism {
    pub fn kind(&self) -> ProtocolKind {
        match self {
            Mechanism::Domset { .. } => ProtocolKind::Domset,
            Mechanism::Lp { .. } => ProtocolKind::Lp,
            Mechanism::Robust { .. } => ProtocolKind::Robust,
            Mechanism::Vecsum { .. } => ProtocolKind::Vecsum,
            Mechanism::Real { .. } => ProtocolKind::Real,
        }
    }

    /// `x_v = Δ` (or `Δ·e₁`, or `1.0`) for every vertex.
    pub fn default_inputs(&self, n: usize) -> MseInputs {
        match self {
            Mechanism::Domset { delta_sens, .. } | Mechanism::Lp { delta_sens, .. } | Mechanism::Robust { delta_sens, .. } => {
                MseInputs::Int(vec![*delta_sens; n])
            }
            Mechanism::Vecsum { delta, dim, .. } => {
                let mut e = vec![0.0; *dim];
                if let Some(c) = e.first_mut() {
                    *c = *delta;
                }
                MseInputs::Vector(vec![e; n])
            }
            Mechanism::Real { .. } => MseInputs::Real(vec![1.0; n]),
        }
    }

    fn run(&self, g: &TrustGraph, x: &MseInputs, noise: NoiseMode, rng: &mut crate::rng::SimRng) -> Result<Transcript, AuditError> {
        let tr = match (self, x) {
            (Mechanism::Domset { set, eps, delta_sens }, MseInputs::Int(x)) => {
                run_domset_protocol(g, set, x, *eps, *delta_sens, noise, rng)?
            }
            (Mechanism::Lp { cover, eps, delta_sens }, MseInputs::Int(x)) => {
                run_lp_protocol(g, cover, x, *eps, *delta_sens, noise, rng)?
            }
            (Mechanism::Robust { cover, eps, delta_sens }, MseInputs::Int(x)) => {
                run_robust_protocol(g, cover, x, *eps, *delta_sens, noise, rng)?
            }
            (Mechanism::Vecsum { set, rho, delta, .. }, MseInputs::Vector(x)) => {
                run_vecsum_protocol(g, set, x, *rho, *delta, noise, rng)?
            }
            (Mechanism::Real { cover, eps, grid }, MseInputs::Real(x)) => {
                real_aggregate(g, cover, x, *eps, *grid, noise, rng)?
            }
            _ => return Err(AuditError::InvalidParameter("input shape does not match the protocol".into())),
        };
        Ok(tr)
    }

    /// Noise variance of the released estimate (trace for vectors), without
    /// wraparound.
    pub fn predicted_variance(&self, x: &MseInputs) -> Result<f64, AuditError> {
        Ok(match self {
            Mechanism::Domset { set, eps, delta_sens } => {
                count_members(set) as f64 * NoiseDist::dlap(*delta_sens as f64 / eps)?.variance()
            }
            Mechanism::Lp { cover, eps, delta_sens } | Mechanism::Robust { cover, eps, delta_sens } => {
                snb_total_variance(cover, *eps, *delta_sens)?
            }
            Mechanism::Vecsum { set, rho, delta, dim } => {
                count_members(set) as f64 * delta * delta / (2.0 * rho) * *dim as f64
            }
            Mechanism::Real { cover, eps, grid } => {
                let scale = (*grid as f64).powi(2);
                let rounding: f64 = match x {
                    MseInputs::Real(x) => x
                        .iter()
                        .map(|&xv| {
                            let s = *grid as f64 * xv;
                            let f = s - s.floor();
                            if f.min(1.0 - f) <= 1e-9 {
                                0.0
                            } else {
                                f * (1.0 - f)
                            }
                        })
                        .sum(),
                    _ => 0.0,
                };
                (snb_total_variance(cover, *eps, *grid)? + rounding) / scale
            }
        })
    }

    /// The closed-form guarantee: `2Δ²·Σy/ε²` for the share protocols,
    /// `2Δ²|T|/ε²` for the dominating-set protocol, `|T|σ²d` for vectors.
    pub fn error_bound(&self) -> f64 {
        match self {
            Mechanism::Domset { set, eps, delta_sens } => {
                2.0 * (*delta_sens as f64).powi(2) * count_members(set) as f64 / eps.powi(2)
            }
            Mechanism::Lp { cover, eps, delta_sens } | Mechanism::Robust { cover, eps, delta_sens } => {
                2.0 * (*delta_sens as f64).powi(2) * cover.objective / eps.powi(2)
            }
            Mechanism::Vecsum { set, rho, delta, dim } => {
                count_members(set) as f64 * delta * delta / (2.0 * rho) * *dim as f64
            }
            Mechanism::Real { cover, eps, .. } => 2.0 * cover.objective / eps.powi(2),
        }
    }

    /// Local-model Laplace error `2Δ²n/ε²` (`nσ²d` for vectors).
    pub fn local_baseline(&self, n: usize) -> f64 {
        match self {
            Mechanism::Domset { eps, delta_sens, .. } | Mechanism::Lp { eps, delta_sens, .. } | Mechanism::Robust { eps, delta_sens, .. } => {
                2.0 * (*delta_sens as f64).powi(2) * n as f64 / eps.powi(2)
            }
            Mechanism::Vecsum { rho, delta, dim, .. } => n as f64 * delta * delta / (2.0 * rho) * *dim as f64,
            Mechanism::Real { eps, .. } => 2.0 * n as f64 / eps.powi(2),
        }
    }

    /// Noise weight relative to the local model: `Σy/n` or `|T|/n`.
    pub fn error_ratio(&self, n: usize) -> f64 {
        let weight = match self {
            Mechanism::Domset { set, .. } | Mechanism::Vecsum { set, .. } => count_members(set) as f64,
            Mechanism::Lp { cover, .. } | Mechanism::Robust { cover, .. } | Mechanism::Real { cover, .. } => cover.objective,
        };
        weight / n as f64
    }
}

fn count_members(set: &[usize]) -> usize {
    let mut s = set.to_vec();
    s.sort_unstable();
    s.dedup();
    s.len()
}

fn snb_total_variance(cover: &FractionalCover, eps: f64, delta_sens: u64) -> Result<f64, AuditError> {
    let p = success_prob(eps, delta_sens);
    let mut total = 0.0;
    for &y in &cover.y {
        total += NoiseDist::snb(y.max(0.0), p)?.variance();
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MseInputs {
    Int(Vec<u64>),
    Real(Vec<f64>),
    Vector(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseConfig {
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "one")]
    pub jobs: usize,
    #[serde(default)]
    pub noise: NoiseMode,
    /// Defaults to [`Mechanism::default_inputs`].
    #[serde(default)]
    pub inputs: Option<MseInputs>,
    #[serde(default)]
    pub keep_records: bool,
}

fn one() -> usize {
    1
}

impl MseConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            jobs: 1,
            noise: NoiseMode::Enabled,
            inputs: None,
            keep_records: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub estimate: Vec<f64>,
    pub truth: Vec<f64>,
    pub sq_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseReport {
    pub kind: ProtocolKind,
    pub trials: usize,
    pub mse: f64,
    /// Standard error of `mse`.
    pub mse_se: f64,
    pub predicted_variance: f64,
    pub error_bound: f64,
    pub local_baseline: f64,
    /// `mse / local_baseline`.
    pub empirical_ratio: f64,
    /// `Σy/n` or `|T|/n`.
    pub error_ratio: f64,
    /// Mean of `estimate − truth`, per component.
    pub bias: Vec<f64>,
    pub bias_se: Vec<f64>,
    pub noise: NoiseMode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<TrialRecord>,
}

impl MseReport {
    /// `trial,estimate,truth,sq_error`; vector components joined by `;`.
    pub fn records_csv(&self) -> String {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
        let mut out = String::from("trial,estimate,truth,sq_error\n");
        for r in &self.records {
            out += &format!("{},{},{},{}\n", r.trial, join(&r.estimate), join(&r.truth), r.sq_error);
        }
        out
    }
}

/// Runs `trials` independent protocol executions, trial `i` on substream
/// `i` of `seed`, so results do not depend on `jobs`.
pub fn empirical_mse(g: &TrustGraph, mech: &Mechanism, cfg: &MseConfig) -> Result<MseReport, AuditError> {
    if cfg.trials == 0 {
        return Err(AuditError::InvalidParameter("trials must be at least 1".into()));
    }
    let inputs = cfg.inputs.clone().unwrap_or_else(|| mech.default_inputs(g.n()));
    let trial = |i: usize| -> Result<TrialRecord, AuditError> {
        let mut rng = substream(cfg.seed, i as u64);
        let tr = mech.run(g, &inputs, cfg.noise, &mut rng)?;
        Ok(TrialRecord {
            trial: i,
            estimate: tr.estimate.components(),
            truth: tr.truth().components(),
            sq_error: tr.sq_error(),
        })
    };
    let records: Vec<TrialRecord> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| AuditError::InvalidParameter(e.to_string()))?;
        pool.install(|| (0..cfg.trials).into_par_iter().map(trial).collect::<Result<_, _>>())?
    } else {
        (0..cfg.trials).map(trial).collect::<Result<_, _>>()?
    };
    let m = cfg.trials as f64;
    let mse = records.iter().map(|r| r.sq_error).sum::<f64>() / m;
    let var_sq = records.iter().map(|r| (r.sq_error - mse).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let dim = records[0].estimate.len();
    let mut bias = vec![0.0; dim];
    let mut bias_sq = vec![0.0; dim];
    for r in &records {
        for k in 0..dim {
            let d = r.estimate[k] - r.truth[k];
            bias[k] += d;
            bias_sq[k] += d * d;
        }
    }
    let bias_se = bias
        .iter()
        .zip(&bias_sq)
        .map(|(s, s2)| {
            let mean = s / m;
            ((s2 / m - mean * mean).max(0.0) / (m - 1.0).max(1.0)).sqrt()
        })
        .collect();
    bias.iter_mut().for_each(|b| *b /= m);
    let local_baseline = mech.local_baseline(g.n());
    let predicted = if cfg.noise == NoiseMode::Disabled { 0.0 } else { mech.predicted_variance(&inputs)? };
    Ok(MseReport {
        kind: mech.kind(),
        trials: cfg.trials,
        mse,
        mse_se: (var_sq / m).sqrt(),
        predicted_variance: predicted,
        error_bound: mech.error_bound(),
        local_baseline,
        empirical_ratio: mse / local_baseline,
        error_ratio: mech.error_ratio(g.n()),
        bias,
        bias_se,
        noise: cfg.noise,
        records: if cfg.keep_records { records } else { Vec::new() },
    })
}

/// `e^ε·ε² / (2(e^ε − 1)²)`, the constant of randomized rounding plus
/// randomized response; tends to `1/2` as `ε → 0`. NaN unless `ε > 0`.
pub fn rr_baseline_constant(eps: f64) -> f64 {
    if !(eps > 0.0) {
        return f64::NAN;
    }
    eps.exp() * eps * eps / (2.0 * eps.exp_m1().powi(2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alpha: f64,
    pub opt_lp: f64,
    /// `OPT_LP^{t_α}/n`.
    pub ratio: f64,
    /// `2·OPT_LP^{t_α}/ε²` at unit sensitivity.
    pub mse_bound: f64,
}

/// Robust LP optimum at `t_α` for each `α`.
pub fn rtgdp_curve(g: &TrustGraph, alphas: &[f64], eps: f64) -> Result<Vec<CurvePoint>, AuditError> {
    check_eps(eps)?;
    let n = g.n().max(1) as f64;
    alphas
        .iter()
        .map(|&alpha| {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(AuditError::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
            }
            let t = make_threshold(g, alpha)?;
            let cover = if t.is_zero() { solve_cover(g)? } else { solve_robust_cover(g, &t)? };
            Ok(CurvePoint {
                alpha,
                opt_lp: cover.objective,
                ratio: cover.objective / n,
                mse_bound: 2.0 * cover.objective / (eps * eps),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::lp::solve_robust_cover;

    fn fig1_cover() -> FractionalCover {
        FractionalCover::from_weights(vec![0.0, 0.0, 1.0, 0.0, 1.0], None)
    }

    #[test]
    fn exact_audit_fig1() {
        let g = fig1();
        let r = exact_statistic_audit(&g, &fig1_cover(), 1.0, 1, None).unwrap();
        assert!(r.pass);
        let masses: Vec<f64> = r.entries.iter().map(|e| e.mass).collect();
        assert_eq!(masses, vec![1.0, 1.0, 1.0, 2.0, 1.0]);
        assert!(r.entries.iter().all(|e| e.ratio <= 1.0 + 1e-9));
        assert!((r.worst_ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn robust_audit_fig1() {
        let g = fig1();
        let t = ThresholdVector::uniform(5, 1);
        let r = exact_statistic_audit(&g, &fig1_cover(), 1.0, 1, Some(&t)).unwrap();
        assert!(!r.pass);
        let a = &r.entries[0];
        assert_eq!(a.excluded, vec![2]);
        assert_eq!(a.mass, 0.0);
        assert!(!a.pass && a.ratio.is_infinite());
        let cover = solve_robust_cover(&g, &t).unwrap();
        assert!(exact_statistic_audit(&g, &cover, 1.0, 1, Some(&t)).unwrap().pass);
    }

    #[test]
    fn zeroed_cover_fails() {
        let g = fig1();
        let mut c = solve_cover(&g).unwrap();
        assert!(exact_statistic_audit(&g, &c, 1.0, 16, None).unwrap().pass);
        // zero the whole neighborhood of A
        for u in [0, 1, 2] {
            c.y[u] = 0.0;
        }
        let r = exact_statistic_audit(&g, &c, 1.0, 16, None).unwrap();
        assert!(!r.pass);
        assert!(r.failures().any(|e| e.vertex == 0));
        assert!(r.to_csv().starts_with("vertex,excluded,mass,ratio,eps,pass\n0,,"));
    }

    #[test]
    fn view_statistic_is_noisy_sum() {
        let g = fig1();
        let mut rng = crate::rng::seeded(2);
        let x = vec![1, 0, 1, 1, 0];
        let tr = run_lp_protocol(&g, &fig1_cover(), &x, 1.0, 1, NoiseMode::Enabled, &mut rng).unwrap();
        let crate::protocol::Draws::Int(z) = &tr.draws else { unreachable!() };
        // protecting A: outsiders are A, B, C
        let stat = view_statistic(&tr, &[3, 4], 5).unwrap();
        let expect = (x[0] + x[1] + x[2]) as i64 + z[0] + z[1] + z[2];
        assert_eq!(stat as i64, expect.rem_euclid(10));
        assert_eq!(view_statistic(&tr, &[], 5), None);
    }

    #[test]
    fn monte_carlo_small() {
        let g = fig1();
        let cfg = McAuditConfig::new(ProtocolKind::Lp, 1.0, 20_000, 3);
        let r = monte_carlo_view_audit(&g, &fig1_cover(), 0, &cfg).unwrap();
        assert_eq!(r.entries.len(), 2);
        assert!(r.pass, "{r:?}");
        assert!(!r.unbounded);

        let off = McAuditConfig {
            noise: NoiseMode::Disabled,
            ..McAuditConfig::new(ProtocolKind::Lp, 1.0, 1000, 3)
        };
        let r = monte_carlo_view_audit(&g, &fig1_cover(), 0, &off).unwrap();
        assert!(r.unbounded && !r.pass);

        let s = star(3);
        let c = FractionalCover::from_weights(vec![1.0, 0.0, 0.0, 0.0], None);
        let r = monte_carlo_view_audit(&s, &c, 0, &McAuditConfig::new(ProtocolKind::Lp, 1.0, 1000, 1)).unwrap();
        assert_eq!(r.worst_ratio, 0.0);

        assert!(matches!(
            monte_carlo_view_audit(&g, &fig1_cover(), 0, &McAuditConfig::new(ProtocolKind::Lp, 1.0, 10, 1)),
            Err(AuditError::AlphabetTooLarge { .. })
        ));
        assert!(matches!(
            monte_carlo_view_audit(&rook(3), &FractionalCover::from_weights(vec![1.0; 9], None), 0, &cfg),
            Err(AuditError::TooLarge { .. })
        ));
    }

    #[test]
    fn mse_noise_disabled_is_zero() {
        let g = fig1();
        let mech = Mechanism::Lp {
            cover: fig1_cover(),
            eps: 1.0,
            delta_sens: 1,
        };
        let cfg = MseConfig {
            noise: NoiseMode::Disabled,
            ..MseConfig::new(50, 1)
        };
        let r = empirical_mse(&g, &mech, &cfg).unwrap();
        assert_eq!(r.mse, 0.0);
        assert!((r.error_ratio - 0.4).abs() < 1e-12);
        assert!((r.error_bound - 4.0).abs() < 1e-12);
        assert!(empirical_mse(&g, &mech, &MseConfig::new(0, 1)).is_err());
    }

    #[test]
    fn mse_is_reproducible_across_jobs() {
        let g = fig1();
        let mech = Mechanism::Domset {
            set: vec![2, 3],
            eps: 1.0,
            delta_sens: 1,
        };
        let mut cfg = MseConfig::new(200, 9);
        cfg.keep_records = true;
        let a = empirical_mse(&g, &mech, &cfg).unwrap();
        cfg.jobs = 3;
        let b = empirical_mse(&g, &mech, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.records_csv().starts_with("trial,estimate,truth,sq_error\n0,"));
    }

    #[test]
    fn rr_constant() {
        assert!((rr_baseline_constant(1.0) - 0.460337).abs() < 1e-6);
        let ln2 = 2f64.ln();
        assert!((rr_baseline_constant(ln2) - ln2 * ln2).abs() < 1e-12);
        assert!((rr_baseline_constant(1e-6) - 0.5).abs() < 1e-6);
        assert!(rr_baseline_constant(0.0).is_nan());
    }

    #[test]
    fn curve_fig1() {
        let c = rtgdp_curve(&fig1(), &[0.0, 0.5, 1.0], 1.0).unwrap();
        assert!((c[0].ratio - 0.4).abs() < 1e-9);
        assert!((c[2].ratio - 1.0).abs() < 1e-9);
        assert!(c[0].opt_lp <= c[1].opt_lp + 1e-9 && c[1].opt_lp <= c[2].opt_lp + 1e-9);
        assert!(rtgdp_curve(&fig1(), &[1.5], 1.0).is_err());
    }
}

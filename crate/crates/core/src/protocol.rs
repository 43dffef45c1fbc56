//! Seeded simulation of the aggregation protocols.
//!
//! Every run produces a [`Transcript`]: all messages (sorted by round,
//! source, destination), the inputs, the noise each party drew, and the
//! estimate decoded from the broadcasts. [`extract_view`] restricts a
//! transcript to what a set of parties saw.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::graph::{GraphError, ThresholdVector, TrustGraph};
use crate::lp::FractionalCover;
use crate::noise::{success_prob, NoiseDist, NoiseError};

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("expected {expected} inputs, got {got}")]
    InputLength { got: usize, expected: usize },
    #[error("input of vertex {vertex} is {value}, outside [0, {bound}]")]
    InputOutOfRange { vertex: usize, value: f64, bound: f64 },
    #[error("vertex {0} has no member of the set in its closed neighborhood")]
    NotDominating(usize),
    #[error("cover leaves vertex {vertex} with noise mass {mass} < 1")]
    InfeasibleCover { vertex: usize, mass: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("vector input of vertex {vertex} has norm {norm} > {bound}")]
    VectorNorm { vertex: usize, norm: f64, bound: f64 },
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Whether noise is drawn. `Disabled` replaces every draw with zero; it is a
/// debugging aid for correctness tests and such transcripts are labeled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    #[default]
    Enabled,
    Disabled,
}

pub const NOISE_DISABLED_LABEL: &str = "NOISE DISABLED: debug run, provides no privacy";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Domset,
    Lp,
    Robust,
    Vecsum,
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dest {
    Vertex(usize),
    Broadcast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    /// Element of `Z_q`.
    Residue(u64),
    Int(i64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub round: u8,
    pub source: usize,
    pub dest: Dest,
    pub payload: Payload,
}

impl Message {
    fn key(&self) -> (u8, usize, Dest) {
        (self.round, self.source, self.dest)
    }

    /// Whether party `v` sent or received this message.
    pub fn involves(&self, v: usize) -> bool {
        self.source == v || matches!(self.dest, Dest::Vertex(d) if d == v) || self.dest == Dest::Broadcast
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inputs {
    Int(Vec<u64>),
    Real(Vec<f64>),
    Vector(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimate {
    Int(i64),
    Real(f64),
    Vector(Vec<f64>),
}

impl Estimate {
    /// Squared (ℓ₂) distance to another estimate of the same shape.
    pub fn sq_error(&self, other: &Estimate) -> f64 {
        let (a, b) = (self.components(), other.components());
        a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum()
    }

    pub fn components(&self) -> Vec<f64> {
        match self {
            Estimate::Int(v) => vec![*v as f64],
            Estimate::Real(v) => vec![*v],
            Estimate::Vector(v) => v.clone(),
        }
    }
}

/// Per-party noise draws (zero for parties that add none).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Draws {
    Int(Vec<i64>),
    Vector(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub kind: ProtocolKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    pub delta_sens: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub noise: NoiseMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub params: Params,
    pub inputs: Inputs,
    /// Integer inputs after randomized rounding (real aggregation only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounded: Option<Vec<u64>>,
    pub messages: Vec<Message>,
    pub draws: Draws,
    pub estimate: Estimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Transcript {
    fn new(params: Params, inputs: Inputs, mut messages: Vec<Message>, draws: Draws, estimate: Estimate) -> Self {
        messages.sort_by_key(Message::key);
        let label = (params.noise == NoiseMode::Disabled).then(|| NOISE_DISABLED_LABEL.to_string());
        Self {
            params,
            inputs,
            rounded: None,
            messages,
            draws,
            estimate,
            label,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.params.seed = Some(seed);
        self
    }

    /// The exact aggregate of the inputs.
    pub fn truth(&self) -> Estimate {
        match &self.inputs {
            Inputs::Int(x) => Estimate::Int(x.iter().map(|&v| v as i64).sum()),
            Inputs::Real(x) => Estimate::Real(x.iter().sum()),
            Inputs::Vector(x) => Estimate::Vector(vector_sum(x.iter().map(Vec::as_slice), x.first().map_or(0, Vec::len))),
        }
    }

    pub fn sq_error(&self) -> f64 {
        self.estimate.sq_error(&self.truth())
    }

    /// Recomputes the estimate from the broadcast messages alone.
    pub fn decode(&self) -> Estimate {
        let broadcasts = self.messages.iter().filter(|m| m.dest == Dest::Broadcast);
        match self.params.kind {
            ProtocolKind::Domset => Estimate::Int(
                broadcasts
                    .map(|m| match m.payload {
                        Payload::Int(a) => a,
                        _ => 0,
                    })
                    .sum(),
            ),
            ProtocolKind::Vecsum => {
                let d = match &self.inputs {
                    Inputs::Vector(x) => x.first().map_or(0, Vec::len),
                    _ => 0,
                };
                let vs: Vec<&[f64]> = broadcasts
                    .filter_map(|m| match &m.payload {
                        Payload::Vector(v) => Some(v.as_slice()),
                        _ => None,
                    })
                    .collect();
                Estimate::Vector(vector_sum(vs.into_iter(), d))
            }
            ProtocolKind::Lp | ProtocolKind::Robust | ProtocolKind::Real => {
                let q = self.params.q.expect("modular protocols record q");
                let total = broadcasts.fold(0u64, |acc, m| match m.payload {
                    Payload::Residue(a) => (acc + a) % q,
                    _ => acc,
                });
                let est = decode_mod(total, q);
                if self.params.kind == ProtocolKind::Real {
                    Estimate::Real(est as f64 / self.params.delta_sens)
                } else {
                    Estimate::Int(est)
                }
            }
        }
    }

    /// `Σ_u z_u` for integer protocols.
    pub fn noise_total(&self) -> i64 {
        match &self.draws {
            Draws::Int(z) => z.iter().sum(),
            Draws::Vector(_) => 0,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("transcript json is always serializable")
    }
}

fn vector_sum<'a>(vs: impl Iterator<Item = &'a [f64]>, d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for v in vs {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    out
}

/// The restriction of a transcript to a set of parties: their inputs and
/// every message they sent or received (broadcasts reach everyone).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct View {
    pub subjects: Vec<usize>,
    pub inputs: Vec<(usize, Estimate)>,
    pub messages: Vec<Message>,
}

impl View {
    pub fn sent_by(&self, v: usize) -> impl Iterator<Item = &Message> {
        self.messages.iter().filter(move |m| m.source == v)
    }

    pub fn received_by(&self, v: usize) -> impl Iterator<Item = &Message> {
        self.messages
            .iter()
            .filter(move |m| m.dest == Dest::Broadcast || m.dest == Dest::Vertex(v))
    }
}

pub fn extract_view(tr: &Transcript, subjects: &[usize]) -> View {
    let mut subjects = subjects.to_vec();
    subjects.sort_unstable();
    subjects.dedup();
    let inside = |v: usize| subjects.binary_search(&v).is_ok();
    let inputs = subjects
        .iter()
        .filter_map(|&v| {
            let x = match &tr.inputs {
                Inputs::Int(x) => Estimate::Int(*x.get(v)? as i64),
                Inputs::Real(x) => Estimate::Real(*x.get(v)?),
                Inputs::Vector(x) => Estimate::Vector(x.get(v)?.clone()),
            };
            Some((v, x))
        })
        .collect();
    let messages = if subjects.is_empty() {
        Vec::new()
    } else {
        tr.messages
            .iter()
            .filter(|m| {
                inside(m.source)
                    || match m.dest {
                        Dest::Vertex(d) => inside(d),
                        Dest::Broadcast => true,
                    }
            })
            .cloned()
            .collect()
    };
    View {
        subjects,
        inputs,
        messages,
    }
}

/// `k` residues summing to `x` mod `q`: the first `k − 1` uniform, the last
/// fixing the sum.
pub fn split_input<R: Rng + ?Sized>(x: u64, k: usize, q: u64, rng: &mut R) -> Result<Vec<u64>, ProtocolError> {
    if k == 0 {
        return Err(ProtocolError::InvalidParameter("share count must be at least 1".into()));
    }
    if q == 0 {
        return Err(ProtocolError::InvalidParameter("modulus must be positive".into()));
    }
    let mut shares: Vec<u64> = (0..k - 1).map(|_| rng.random_range(0..q)).collect();
    let partial = shares.iter().fold(0u64, |acc, &s| (acc + s) % q);
    shares.push((x % q + q - partial) % q);
    Ok(shares)
}

/// Centered representative of `a` in `(−q/2, q/2]`.
pub fn decode_mod(a: u64, q: u64) -> i64 {
    if 2 * a <= q {
        a as i64
    } else {
        a as i64 - q as i64
    }
}

/// `ρ + 2√(ρ ln(1/δ))`.
pub fn zcdp_to_dp(rho: f64, delta: f64) -> Result<f64, ProtocolError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(ProtocolError::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(ProtocolError::InvalidParameter(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    Ok(rho + 2.0 * (rho * (1.0 / delta).ln()).sqrt())
}

fn check_eps(eps: f64) -> Result<(), ProtocolError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(ProtocolError::InvalidParameter(format!("epsilon must be positive, got {eps}")))
    }
}

fn check_int_inputs(g: &TrustGraph, x: &[u64], delta_sens: u64) -> Result<(), ProtocolError> {
    if delta_sens == 0 {
        return Err(ProtocolError::InvalidParameter("sensitivity must be at least 1".into()));
    }
    if x.len() != g.n() {
        return Err(ProtocolError::InputLength {
            got: x.len(),
            expected: g.n(),
        });
    }
    if let Some(v) = x.iter().position(|&xv| xv > delta_sens) {
        return Err(ProtocolError::InputOutOfRange {
            vertex: v,
            value: x[v] as f64,
            bound: delta_sens as f64,
        });
    }
    Ok(())
}

/// For each vertex, the lowest-id member of `set` in its closed
/// neighborhood. Errors if `set` does not dominate.
fn assign_dominators(g: &TrustGraph, set: &[usize]) -> Result<Vec<usize>, ProtocolError> {
    let mut member = vec![false; g.n()];
    for &u in set {
        if u >= g.n() {
            return Err(GraphError::VertexOutOfRange { vertex: u, n: g.n() }.into());
        }
        member[u] = true;
    }
    (0..g.n())
        .map(|v| {
            g.closed_unchecked(v)
                .into_iter()
                .find(|&u| member[u])
                .ok_or(ProtocolError::NotDominating(v))
        })
        .collect()
}

fn members(set: &[usize]) -> Vec<usize> {
    let mut s = set.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

/// Each vertex hands its input to a dominator, which broadcasts the sum of
/// what it received plus `DLap(Δ/ε)` noise.
pub fn run_domset_protocol<R: Rng + ?Sized>(
    g: &TrustGraph,
    dominating_set: &[usize],
    x: &[u64],
    eps: f64,
    delta_sens: u64,
    noise: NoiseMode,
    rng: &mut R,
) -> Result<Transcript, ProtocolError> {
    check_eps(eps)?;
    check_int_inputs(g, x, delta_sens)?;
    let owner = assign_dominators(g, dominating_set)?;
    let set = members(dominating_set);
    let dist = NoiseDist::dlap(delta_sens as f64 / eps)?;
    let mut messages = Vec::with_capacity(g.n() + set.len());
    let mut received = vec![0i64; g.n()];
    for v in 0..g.n() {
        messages.push(Message {
            round: 1,
            source: v,
            dest: Dest::Vertex(owner[v]),
            payload: Payload::Int(x[v] as i64),
        });
        received[owner[v]] += x[v] as i64;
    }
    let mut z = vec![0i64; g.n()];
    let mut estimate = 0i64;
    for &u in &set {
        if noise == NoiseMode::Enabled {
            z[u] = dist.sample(rng);
        }
        let a = received[u] + z[u];
        estimate += a;
        messages.push(Message {
            round: 2,
            source: u,
            dest: Dest::Broadcast,
            payload: Payload::Int(a),
        });
    }
    Ok(Transcript::new(
        Params {
            kind: ProtocolKind::Domset,
            eps: Some(eps),
            rho: None,
            delta_sens: delta_sens as f64,
            q: None,
            seed: None,
            noise,
        },
        Inputs::Int(x.to_vec()),
        messages,
        Draws::Int(z),
        Estimate::Int(estimate),
    ))
}

fn check_cover(g: &TrustGraph, cover: &FractionalCover, t: Option<&ThresholdVector>) -> Result<(), ProtocolError> {
    if cover.len() != g.n() {
        return Err(ProtocolError::InputLength {
            got: cover.len(),
            expected: g.n(),
        });
    }
    if !cover.is_feasible(g, t) {
        let (vertex, mass) = if g.n() == 0 { (0, 0.0) } else { cover.min_coverage(g, t) };
        return Err(ProtocolError::InfeasibleCover { vertex, mass });
    }
    Ok(())
}

/// Share-based protocol shared by the plain and robust variants.
fn run_shares<R: Rng + ?Sized>(
    g: &TrustGraph,
    cover: &FractionalCover,
    x: &[u64],
    eps: f64,
    delta_sens: u64,
    noise: NoiseMode,
    kind: ProtocolKind,
    rng: &mut R,
) -> Result<Transcript, ProtocolError> {
    let n = g.n() as u64;
    let q = (2 * n * delta_sens).max(2);
    let p = success_prob(eps, delta_sens);
    let mut messages = Vec::new();
    let mut inbox = vec![0u64; g.n()];
    for v in 0..g.n() {
        let nbhd = g.closed_unchecked(v);
        let shares = split_input(x[v], nbhd.len(), q, rng)?;
        for (&u, s) in nbhd.iter().zip(shares) {
            inbox[u] = (inbox[u] + s) % q;
            messages.push(Message {
                round: 1,
                source: v,
                dest: Dest::Vertex(u),
                payload: Payload::Residue(s),
            });
        }
    }
    let mut z = vec![0i64; g.n()];
    let mut total = 0u64;
    for u in 0..g.n() {
        if noise == NoiseMode::Enabled {
            z[u] = NoiseDist::snb(cover.y[u].max(0.0), p)?.sample(rng);
        }
        let a = (inbox[u] as i64 + z[u]).rem_euclid(q as i64) as u64;
        total = (total + a) % q;
        messages.push(Message {
            round: 2,
            source: u,
            dest: Dest::Broadcast,
            payload: Payload::Residue(a),
        });
    }
    Ok(Transcript::new(
        Params {
            kind,
            eps: Some(eps),
            rho: None,
            delta_sens: delta_sens as f64,
            q: Some(q),
            seed: None,
            noise,
        },
        Inputs::Int(x.to_vec()),
        messages,
        Draws::Int(z),
        Estimate::Int(decode_mod(total, q)),
    ))
}

/// Input splitting over closed neighborhoods with `sNB(y_u, 1 − e^{−ε/Δ})`
/// noise per party and modulus `q = 2nΔ`.
pub fn run_lp_protocol<R: Rng + ?Sized>(
    g: &TrustGraph,
    cover: &FractionalCover,
    x: &[u64],
    eps: f64,
    delta_sens: u64,
    noise: NoiseMode,
    rng: &mut R,
) -> Result<Transcript, ProtocolError> {
    check_eps(eps)?;
    check_int_inputs(g, x, delta_sens)?;
    check_cover(g, cover, None)?;
    run_shares(g, cover, x, eps, delta_sens, noise, ProtocolKind::Lp, rng)
}

/// Same mechanics as [`run_lp_protocol`]; the cover is checked against the
/// robust constraints for its recorded thresholds.
pub fn run_robust_protocol<R: Rng + ?Sized>(
    g: &TrustGraph,
    cover: &FractionalCover,
    x: &[u64],
    eps: f64,
    delta_sens: u64,
    noise: NoiseMode,
    rng: &mut R,
) -> Result<Transcript, ProtocolError> {
    check_eps(eps)?;
    check_int_inputs(g, x, delta_sens)?;
    let t = cover.robust_t.clone().unwrap_or_else(|| ThresholdVector::zeros(g.n()));
    t.check_len(g)?;
    check_cover(g, cover, Some(&t))?;
    run_shares(g, cover, x, eps, delta_sens, noise, ProtocolKind::Robust, rng)
}

/// Vector summation: inputs go to a dominator, which broadcasts their sum
/// plus `N(0, σ²I)` with `σ = Δ√(1/(2ρ))`.
pub fn run_vecsum_protocol<R: Rng + ?Sized>(
    g: &TrustGraph,
    dominating_set: &[usize],
    x: &[Vec<f64>],
    rho: f64,
    delta: f64,
    noise: NoiseMode,
    rng: &mut R,
) -> Result<Transcript, ProtocolError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(ProtocolError::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(ProtocolError::InvalidParameter(format!("norm bound must be positive, got {delta}")));
    }
    if x.len() != g.n() {
        return Err(ProtocolError::InputLength {
            got: x.len(),
            expected: g.n(),
        });
    }
    let d = x.first().map_or(0, Vec::len);
    for (v, xv) in x.iter().enumerate() {
        if xv.len() != d {
            return Err(ProtocolError::InvalidParameter(format!(
                "vertex {v} has dimension {}, expected {d}",
                xv.len()
            )));
        }
        let norm = xv.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > delta * (1.0 + 1e-12) {
            return Err(ProtocolError::VectorNorm { vertex: v, norm, bound: delta });
        }
    }
    let owner = assign_dominators(g, dominating_set)?;
    let set = members(dominating_set);
    let sigma = delta * (1.0 / (2.0 * rho)).sqrt();
    let gauss = Normal::new(0.0, sigma).map_err(|e| ProtocolError::InvalidParameter(e.to_string()))?;
    let mut messages = Vec::new();
    let mut received = vec![vec![0.0; d]; g.n()];
    for v in 0..g.n() {
        messages.push(Message {
            round: 1,
            source: v,
            dest: Dest::Vertex(owner[v]),
            payload: Payload::Vector(x[v].clone()),
        });
        for (r, c) in received[owner[v]].iter_mut().zip(&x[v]) {
            *r += c;
        }
    }
    let mut z = vec![vec![0.0; d]; g.n()];
    let mut estimate = vec![0.0; d];
    for &u in &set {
        if noise == NoiseMode::Enabled {
            z[u] = (0..d).map(|_| gauss.sample(rng)).collect();
        }
        let a: Vec<f64> = received[u].iter().zip(&z[u]).map(|(r, e)| r + e).collect();
        for (e, c) in estimate.iter_mut().zip(&a) {
            *e += c;
        }
        messages.push(Message {
            round: 2,
            source: u,
            dest: Dest::Broadcast,
            payload: Payload::Vector(a),
        });
    }
    Ok(Transcript::new(
        Params {
            kind: ProtocolKind::Vecsum,
            eps: None,
            rho: Some(rho),
            delta_sens: delta,
            q: None,
            seed: None,
            noise,
        },
        Inputs::Vector(x.to_vec()),
        messages,
        Draws::Vector(z),
        Estimate::Vector(estimate),
    ))
}

/// Unbiased randomized rounding of `v ≥ 0` to `⌊v⌋` or `⌊v⌋ + 1`. Values
/// within `1e-9` of an integer are taken as that integer.
pub fn randomized_round<R: Rng + ?Sized>(v: f64, rng: &mut R) -> u64 {
    let nearest = v.round();
    if (v - nearest).abs() <= 1e-9 {
        return nearest as u64;
    }
    let floor = v.floor();
    floor as u64 + u64::from(rng.random::<f64>() < v - floor)
}

/// Aggregates reals in `[0, 1]`: each input is scaled by the grid size `Δ`,
/// randomly rounded, summed with the share protocol, and rescaled.
pub fn real_aggregate<R: Rng + ?Sized>(
    g: &TrustGraph,
    cover: &FractionalCover,
    x: &[f64],
    eps: f64,
    grid: u64,
    noise: NoiseMode,
    rng: &mut R,
) -> Result<Transcript, ProtocolError> {
    check_eps(eps)?;
    if grid == 0 {
        return Err(ProtocolError::InvalidParameter("grid size must be at least 1".into()));
    }
    if x.len() != g.n() {
        return Err(ProtocolError::InputLength {
            got: x.len(),
            expected: g.n(),
        });
    }
    if let Some(v) = x.iter().position(|xv| !(0.0..=1.0).contains(xv)) {
        return Err(ProtocolError::InputOutOfRange {
            vertex: v,
            value: x[v],
            bound: 1.0,
        });
    }
    check_cover(g, cover, None)?;
    let rounded: Vec<u64> = x.iter().map(|&xv| randomized_round(grid as f64 * xv, rng)).collect();
    let inner = run_shares(g, cover, &rounded, eps, grid, noise, ProtocolKind::Real, rng)?;
    let est = match inner.estimate {
        Estimate::Int(a) => a as f64 / grid as f64,
        _ => unreachable!("share protocol yields an integer"),
    };
    let mut tr = Transcript {
        inputs: Inputs::Real(x.to_vec()),
        estimate: Estimate::Real(est),
        ..inner
    };
    tr.rounded = Some(rounded);
    Ok(tr)
}

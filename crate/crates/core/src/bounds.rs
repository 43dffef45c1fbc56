//! Lower-bound witnesses: packings (plain and robust), dominating sets, the
//! greedy `√n` packing, and randomized rounding of the robust packing dual.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{make_threshold, GraphError, ThresholdVector, TrustGraph};
use crate::lp::{solve_cover, solve_robust_cover, DualPacking, LpError};

pub const DEFAULT_PACKING_CAP: usize = 32;
pub const DEFAULT_DOMSET_CAP: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum BoundsError {
    #[error("exact solver limited to n <= {cap}, graph has n = {n}")]
    TooLarge { n: usize, cap: usize },
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Vertices `U` with exclusion sets `T_u` such that the sets `N[u] ∖ T_u`
/// are pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingCertificate {
    #[serde(rename = "U")]
    pub vertices: Vec<usize>,
    /// Nonempty exclusion sets only.
    #[serde(rename = "T")]
    pub exclusions: BTreeMap<usize, Vec<usize>>,
    pub thresholds: Option<ThresholdVector>,
    /// Whether the size is the maximum.
    #[serde(default)]
    pub exact: bool,
}

impl PackingCertificate {
    fn plain(mut vertices: Vec<usize>, exact: bool) -> Self {
        vertices.sort_unstable();
        Self {
            vertices,
            exclusions: BTreeMap::new(),
            thresholds: None,
            exact,
        }
    }

    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    pub fn exclusion(&self, u: usize) -> &[usize] {
        self.exclusions.get(&u).map_or(&[], Vec::as_slice)
    }

    /// Re-checks the certificate against its own thresholds (zero if none).
    pub fn validate(&self, g: &TrustGraph) -> bool {
        let t = self.thresholds.clone().unwrap_or_else(|| ThresholdVector::zeros(g.n()));
        validate_robust_packing(g, &t, self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominatingSetCertificate {
    pub vertices: Vec<usize>,
    pub exact: bool,
}

impl DominatingSetCertificate {
    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_dominating(&self, g: &TrustGraph) -> bool {
        is_dominating(g, &self.vertices)
    }
}

pub fn is_dominating(g: &TrustGraph, set: &[usize]) -> bool {
    let mut dominated = vec![false; g.n()];
    for &u in set {
        if u >= g.n() {
            return false;
        }
        dominated[u] = true;
        for &w in g.neighbors(u) {
            dominated[w] = true;
        }
    }
    dominated.into_iter().all(|d| d)
}

/// Scan order for [`maximal_packing`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PackingOrder {
    /// Ascending degree, ties by id.
    #[default]
    AscendingDegree,
    AscendingId,
    Custom(Vec<usize>),
}

impl PackingOrder {
    fn vertices(&self, g: &TrustGraph) -> Vec<usize> {
        match self {
            PackingOrder::AscendingId => (0..g.n()).collect(),
            PackingOrder::AscendingDegree => {
                let mut order: Vec<usize> = (0..g.n()).collect();
                order.sort_by_key(|&v| (g.degree(v), v));
                order
            }
            PackingOrder::Custom(order) => order.clone(),
        }
    }
}

/// Greedy scan adding `v` whenever `N[v]` misses every chosen closed
/// neighborhood. Vertices missing from a custom order are scanned last.
pub fn maximal_packing(g: &TrustGraph, order: &PackingOrder) -> PackingCertificate {
    let mut seen = vec![false; g.n()];
    let mut scan: Vec<usize> = order.vertices(g).into_iter().filter(|&v| v < g.n()).collect();
    for &v in &scan {
        seen[v] = true;
    }
    scan.extend((0..g.n()).filter(|&v| !seen[v]));
    let mut covered = vec![false; g.n()];
    let mut chosen = Vec::new();
    for v in scan {
        if covered[v] || g.neighbors(v).iter().any(|&u| covered[u]) {
            continue;
        }
        covered[v] = true;
        for &u in g.neighbors(v) {
            covered[u] = true;
        }
        chosen.push(v);
    }
    PackingCertificate::plain(chosen, false)
}

/// True when the plain packing `set` admits no further vertex.
pub fn is_maximal_packing(g: &TrustGraph, set: &[usize]) -> bool {
    let mut covered = vec![false; g.n()];
    for &u in set {
        covered[u] = true;
        for &w in g.neighbors(u) {
            covered[w] = true;
        }
    }
    (0..g.n()).all(|v| covered[v] || g.neighbors(v).iter().any(|&u| covered[u]))
}

/// Repeatedly takes the remaining vertex of smallest degree (in `G`, ties by
/// id) and discards every remaining vertex within distance two of it.
pub fn greedy_sqrt_packing(g: &TrustGraph) -> PackingCertificate {
    let mut order: Vec<usize> = (0..g.n()).collect();
    order.sort_by_key(|&v| (g.degree(v), v));
    let mut removed = vec![false; g.n()];
    let mut chosen = Vec::new();
    for v in order {
        if removed[v] {
            continue;
        }
        chosen.push(v);
        for w in g.closed_unchecked(v) {
            removed[w] = true;
            for &u in g.neighbors(w) {
                removed[u] = true;
            }
        }
    }
    PackingCertificate::plain(chosen, false)
}

/// Fixed-width bitset over vertex ids.
#[derive(Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn full(n: usize) -> Self {
        let mut b = Self::empty(n);
        for v in 0..n {
            b.set(v);
        }
        b
    }
    fn set(&mut self, v: usize) {
        self.0[v / 64] |= 1 << (v % 64);
    }
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn and_not(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & !b).collect())
    }
    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }
    fn or_assign(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }
    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + b)
            })
        })
    }
    fn first(&self) -> Option<usize> {
        self.iter().next()
    }
    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
}

fn closed_bits(g: &TrustGraph) -> Vec<Bits> {
    (0..g.n())
        .map(|v| {
            let mut b = Bits::empty(g.n());
            for u in g.closed_unchecked(v) {
                b.set(u);
            }
            b
        })
        .collect()
}

/// Largest packing by branch and bound on the conflict graph (`u ~ u'`
/// when their closed neighborhoods meet), pruned by a greedy clique-cover
/// bound and stopped early when it reaches `⌊OPT_LP⌋`.
pub fn exact_max_packing(g: &TrustGraph, cap: usize) -> Result<PackingCertificate, BoundsError> {
    let n = g.n();
    if n > cap {
        return Err(BoundsError::TooLarge { n, cap });
    }
    let closed = closed_bits(g);
    // conflict[u] = vertices within distance two of u, u included
    let conflict: Vec<Bits> = (0..n)
        .map(|u| {
            let mut b = Bits::empty(n);
            for w in closed[u].iter() {
                b.or_assign(&closed[w]);
            }
            b
        })
        .collect();
    let ceiling = if n == 0 { 0 } else { (solve_cover(g)?.objective + 1e-7).floor() as usize };
    let greedy = maximal_packing(g, &PackingOrder::AscendingDegree);
    let mut search = PackingSearch {
        conflict: &conflict,
        best: greedy.vertices.clone(),
        ceiling,
    };
    if search.best.len() < ceiling {
        search.expand(&mut Vec::new(), Bits::full(n));
    }
    Ok(PackingCertificate::plain(search.best, true))
}

struct PackingSearch<'a> {
    conflict: &'a [Bits],
    best: Vec<usize>,
    ceiling: usize,
}

impl PackingSearch<'_> {
    /// Greedy partition of `cand` into conflict cliques; each clique holds at
    /// most one packing vertex.
    fn clique_bound(&self, cand: &Bits) -> usize {
        let mut left = cand.clone();
        let mut cliques = 0;
        while let Some(v) = left.first() {
            let mut clique = self.conflict[v].and(&left);
            let mut members = Bits::empty(cand.0.len() * 64);
            members.set(v);
            let mut pool = clique.clone();
            pool.0[v / 64] &= !(1 << (v % 64));
            while let Some(u) = pool.first() {
                members.set(u);
                clique = clique.and(&self.conflict[u]);
                pool = clique.and_not(&members);
            }
            left = left.and_not(&members);
            cliques += 1;
        }
        cliques
    }

    fn expand(&mut self, current: &mut Vec<usize>, cand: Bits) -> bool {
        if cand.is_empty() {
            if current.len() > self.best.len() {
                self.best = current.clone();
            }
            return self.best.len() >= self.ceiling;
        }
        if current.len() + self.clique_bound(&cand) <= self.best.len() {
            return false;
        }
        // branch on the candidate with the fewest conflicts
        let v = cand
            .iter()
            .min_by_key(|&v| self.conflict[v].and(&cand).count())
            .expect("nonempty");
        current.push(v);
        let stop = self.expand(current, cand.and_not(&self.conflict[v]));
        current.pop();
        if stop {
            return true;
        }
        let mut without = cand;
        without.0[v / 64] &= !(1 << (v % 64));
        self.expand(current, without)
    }
}

/// Repeatedly adds the vertex dominating the most undominated vertices,
/// ties to the lowest id.
pub fn greedy_dominating_set(g: &TrustGraph) -> DominatingSetCertificate {
    let n = g.n();
    let mut dominated = vec![false; n];
    let mut gain: Vec<usize> = (0..n).map(|v| g.degree(v) + 1).collect();
    let mut left = n;
    let mut chosen = Vec::new();
    while left > 0 {
        let u = (0..n).max_by_key(|&v| (gain[v], std::cmp::Reverse(v))).expect("n > 0");
        chosen.push(u);
        for w in g.closed_unchecked(u) {
            if !dominated[w] {
                dominated[w] = true;
                left -= 1;
                for x in g.closed_unchecked(w) {
                    gain[x] -= 1;
                }
            }
        }
    }
    chosen.sort_unstable();
    DominatingSetCertificate {
        vertices: chosen,
        exact: false,
    }
}

/// Minimum dominating set by branch and bound: branch over the dominators
/// of the undominated vertex with the fewest options, pruned with a
/// disjoint-neighborhood lower bound and stopped at `⌈OPT_LP⌉`.
pub fn exact_min_dominating_set(g: &TrustGraph, cap: usize) -> Result<DominatingSetCertificate, BoundsError> {
    let n = g.n();
    if n > cap {
        return Err(BoundsError::TooLarge { n, cap });
    }
    if n == 0 {
        return Ok(DominatingSetCertificate {
            vertices: Vec::new(),
            exact: true,
        });
    }
    let closed = closed_bits(g);
    let floor = (solve_cover(g)?.objective - 1e-7).ceil() as usize;
    let greedy = greedy_dominating_set(g);
    let mut search = DomsetSearch {
        closed: &closed,
        best: greedy.vertices,
        floor,
    };
    if search.best.len() > floor {
        search.expand(&mut Vec::new(), Bits::full(n), &Bits::empty(n));
    }
    let mut vertices = search.best;
    vertices.sort_unstable();
    Ok(DominatingSetCertificate { vertices, exact: true })
}

struct DomsetSearch<'a> {
    closed: &'a [Bits],
    best: Vec<usize>,
    floor: usize,
}

impl DomsetSearch<'_> {
    /// Undominated vertices with pairwise disjoint allowed-dominator sets
    /// each need their own dominator.
    fn lower_bound(&self, undominated: &Bits, banned: &Bits) -> usize {
        let mut used = Bits::empty(self.closed.len());
        let mut count = 0;
        for v in undominated.iter() {
            let options = self.closed[v].and_not(banned);
            if options.and(&used).is_empty() {
                used.or_assign(&options);
                count += 1;
            }
        }
        count
    }

    fn expand(&mut self, current: &mut Vec<usize>, undominated: Bits, banned: &Bits) -> bool {
        if undominated.is_empty() {
            if current.len() < self.best.len() {
                self.best = current.clone();
            }
            return self.best.len() <= self.floor;
        }
        if current.len() + self.lower_bound(&undominated, banned) >= self.best.len() {
            return false;
        }
        let v = undominated
            .iter()
            .min_by_key(|&v| self.closed[v].and_not(banned).count())
            .expect("nonempty");
        let mut options: Vec<usize> = self.closed[v].and_not(banned).iter().collect();
        options.sort_by_key(|&u| std::cmp::Reverse(self.closed[u].and(&undominated).count()));
        // once an option has been tried, later branches need not use it
        let mut banned = banned.clone();
        for u in options {
            current.push(u);
            let stop = self.expand(current, undominated.and_not(&self.closed[u]), &banned);
            current.pop();
            if stop {
                return true;
            }
            banned.set(u);
        }
        false
    }
}

/// Checks that every `T_u ⊆ N(u)` with `|T_u| ≤ t_u` and that the sets
/// `N[u] ∖ T_u` are pairwise disjoint.
pub fn validate_robust_packing(g: &TrustGraph, t: &ThresholdVector, cert: &PackingCertificate) -> bool {
    if t.len() != g.n() {
        return false;
    }
    let mut owner = vec![usize::MAX; g.n()];
    let mut seen = vec![false; g.n()];
    for &u in &cert.vertices {
        if u >= g.n() || seen[u] {
            return false;
        }
        seen[u] = true;
        let excl = cert.exclusion(u);
        if excl.len() > t.get(u) || excl.iter().any(|&w| !g.has_edge(u, w)) {
            return false;
        }
        for w in g.closed_unchecked(u) {
            if excl.contains(&w) {
                continue;
            }
            if owner[w] != usize::MAX {
                return false;
            }
            owner[w] = u;
        }
    }
    cert.exclusions.keys().all(|u| seen.get(*u).copied().unwrap_or(false))
}

/// Greedy `(2, t)`-robust packing: scan in `order`, accept `v` when it is
/// not yet claimed and at most `t_v` of its neighbors are; spare exclusion
/// slots go to the highest-degree free neighbors.
pub fn maximal_robust_packing(g: &TrustGraph, t: &ThresholdVector, order: &PackingOrder) -> Result<PackingCertificate, BoundsError> {
    t.check_len(g)?;
    let mut claimed = vec![false; g.n()];
    let mut vertices = Vec::new();
    let mut exclusions = BTreeMap::new();
    for v in order.vertices(g) {
        if v >= g.n() || claimed[v] {
            continue;
        }
        let mut excl: Vec<usize> = g.neighbors(v).iter().copied().filter(|&u| claimed[u]).collect();
        let budget = t.get(v);
        if excl.len() > budget {
            continue;
        }
        let mut free: Vec<usize> = g.neighbors(v).iter().copied().filter(|&u| !claimed[u]).collect();
        free.sort_by_key(|&u| (std::cmp::Reverse(g.degree(u)), u));
        excl.extend(free.into_iter().take(budget - excl.len()));
        excl.sort_unstable();
        claimed[v] = true;
        for &u in g.neighbors(v) {
            if excl.binary_search(&u).is_err() {
                claimed[u] = true;
            }
        }
        vertices.push(v);
        if !excl.is_empty() {
            exclusions.insert(v, excl);
        }
    }
    vertices.sort_unstable();
    Ok(PackingCertificate {
        vertices,
        exclusions,
        thresholds: Some(t.clone()),
        exact: false,
    })
}

/// Randomized rounding of a robust packing dual into a
/// `(2, t + ⌈α·deg⌉)`-robust packing with `γ = α/8`.
///
/// Each dual entry `(v, T)` is kept with probability `2γ·w_{v,T}`. A kept
/// entry survives if no other kept entry claims `v` and other kept entries
/// claim at most `α·deg(v)` of its neighbors; each survivor then excludes
/// the neighbors claimed by other survivors.
pub fn rounded_robust_packing<R: Rng + ?Sized>(
    g: &TrustGraph,
    t: &ThresholdVector,
    alpha: f64,
    dual: &DualPacking,
    rng: &mut R,
) -> Result<PackingCertificate, BoundsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(BoundsError::InvalidAlpha(alpha));
    }
    t.check_len(g)?;
    let gamma = alpha / 8.0;
    let thresholds = t.plus(&make_threshold(g, alpha)?);
    let n = g.n();
    let keep = |excluded: &[usize], s: usize| excluded.binary_search(&s).is_err();
    let claims = |entries: &[&crate::lp::DualEntry]| {
        let mut count = vec![0usize; n];
        for e in entries {
            for s in g.closed_unchecked(e.vertex) {
                if keep(&e.excluded, s) {
                    count[s] += 1;
                }
            }
        }
        count
    };
    let r0: Vec<&crate::lp::DualEntry> = dual
        .entries
        .iter()
        .filter(|e| rng.random::<f64>() < (2.0 * gamma * e.weight).min(1.0))
        .collect();
    // claimed by some entry other than `e`
    let by_other = |count: &[usize], e: &crate::lp::DualEntry, s: usize| {
        let own = usize::from(s == e.vertex || (g.has_edge(e.vertex, s) && keep(&e.excluded, s)));
        count[s] > own
    };
    let c0 = claims(&r0);
    let r1: Vec<&crate::lp::DualEntry> = r0
        .iter()
        .copied()
        .filter(|e| {
            let v = e.vertex;
            if by_other(&c0, e, v) {
                return false;
            }
            let overlap = g.neighbors(v).iter().filter(|&&u| by_other(&c0, e, u)).count();
            overlap as f64 <= alpha * g.degree(v) as f64
        })
        .collect();
    let c1 = claims(&r1);
    let mut vertices = Vec::with_capacity(r1.len());
    let mut exclusions = BTreeMap::new();
    for e in &r1 {
        let v = e.vertex;
        let mut excl = e.excluded.clone();
        excl.extend(g.neighbors(v).iter().copied().filter(|&u| by_other(&c1, e, u)));
        excl.sort_unstable();
        excl.dedup();
        vertices.push(v);
        if !excl.is_empty() {
            exclusions.insert(v, excl);
        }
    }
    vertices.sort_unstable();
    Ok(PackingCertificate {
        vertices,
        exclusions,
        thresholds: Some(thresholds),
        exact: false,
    })
}

/// Options for [`gap_report`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapOptions {
    pub exact: bool,
    pub packing_cap: usize,
    pub domset_cap: usize,
    pub order: PackingOrder,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            exact: false,
            packing_cap: DEFAULT_PACKING_CAP,
            domset_cap: DEFAULT_DOMSET_CAP,
            order: PackingOrder::AscendingDegree,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    pub n: usize,
    #[serde(rename = "OPT_LP")]
    pub opt_lp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opt_lp_exact: Option<String>,
    pub robust: bool,
    /// Packing size; the maximum when `rho_exact`.
    pub rho: usize,
    pub rho_exact: bool,
    pub maximal_packing: usize,
    pub sqrt_packing: usize,
    /// Dominating set size; the minimum when `gamma_exact`.
    pub gamma: usize,
    pub gamma_exact: bool,
    pub ratio_opt_n: f64,
    pub ratio_opt_packing: f64,
    pub ratio_domset_opt: f64,
    /// `OPT_LP/√n`: the floor for any packing found by the `√n` greedy.
    pub sqrt_n_floor: f64,
}

/// Assembles the LP optimum with packing and dominating-set witnesses.
/// With thresholds, the LP is the robust one and the packing is a greedy
/// robust packing.
pub fn gap_report(g: &TrustGraph, t: Option<&ThresholdVector>, opts: &GapOptions) -> Result<GapReport, BoundsError> {
    let n = g.n();
    let robust = t.is_some_and(|t| !t.is_zero());
    let cover = match t {
        Some(t) if robust => solve_robust_cover(g, t)?,
        _ => solve_cover(g)?,
    };
    let (maximal, sqrt) = match t {
        Some(t) if robust => (maximal_robust_packing(g, t, &opts.order)?.size(), 0),
        _ => (maximal_packing(g, &opts.order).size(), greedy_sqrt_packing(g).size()),
    };
    let (rho, rho_exact) = if opts.exact && !robust {
        (exact_max_packing(g, opts.packing_cap)?.size(), true)
    } else {
        (maximal.max(sqrt), false)
    };
    let (gamma, gamma_exact) = if opts.exact {
        (exact_min_dominating_set(g, opts.domset_cap)?.size(), true)
    } else {
        (greedy_dominating_set(g).size(), false)
    };
    let opt = cover.objective;
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { f64::NAN };
    Ok(GapReport {
        n,
        opt_lp: opt,
        opt_lp_exact: cover.exact_objective.clone(),
        robust,
        rho,
        rho_exact,
        maximal_packing: maximal,
        sqrt_packing: sqrt,
        gamma,
        gamma_exact,
        ratio_opt_n: ratio(opt, n as f64),
        ratio_opt_packing: ratio(opt, rho as f64),
        ratio_domset_opt: ratio(gamma as f64, opt),
        sqrt_n_floor: ratio(opt, (n as f64).sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::lp::robust_dual_multipliers;
    use crate::rng::seeded;

    #[test]
    fn fig1_packings() {
        let g = fig1();
        let p = maximal_packing(&g, &PackingOrder::AscendingId);
        assert_eq!(p.vertices, vec![0, 4]);
        assert!(is_maximal_packing(&g, &p.vertices));
        assert_eq!(greedy_sqrt_packing(&g).vertices, vec![0, 4]);
        assert_eq!(exact_max_packing(&g, 32).unwrap().size(), 2);
        assert_eq!(maximal_packing(&star(8), &PackingOrder::default()).size(), 1);
        assert_eq!(greedy_sqrt_packing(&TrustGraph::edgeless(4)).size(), 4);
    }

    #[test]
    fn rook_gap() {
        let g = rook(4);
        assert_eq!(exact_max_packing(&g, 32).unwrap().size(), 1);
        assert_eq!(greedy_sqrt_packing(&g).size(), 1);
        assert_eq!(greedy_dominating_set(&g).size(), 4);
        assert_eq!(exact_min_dominating_set(&g, 64).unwrap().size(), 4);
    }

    #[test]
    fn dominating_sets() {
        let g = fig1();
        let d = greedy_dominating_set(&g);
        assert_eq!(d.vertices, vec![2, 3]);
        assert!(d.is_dominating(&g));
        assert_eq!(exact_min_dominating_set(&g, 64).unwrap().size(), 2);
        assert_eq!(greedy_dominating_set(&star(8)).vertices, vec![0]);
        assert_eq!(exact_min_dominating_set(&TrustGraph::edgeless(1), 64).unwrap().size(), 1);
        assert!(matches!(exact_min_dominating_set(&rook(9), 64), Err(BoundsError::TooLarge { n: 81, cap: 64 })));
    }

    #[test]
    fn robust_packing_validation() {
        let g = fig1();
        let zero = ThresholdVector::zeros(5);
        let ok = PackingCertificate::plain(vec![0, 4], false);
        assert!(validate_robust_packing(&g, &zero, &ok));
        assert!(!validate_robust_packing(&g, &zero, &PackingCertificate::plain(vec![0, 1], false)));
        assert!(validate_robust_packing(&g, &zero, &PackingCertificate::plain(vec![], false)));
        // A and D conflict through C; excluding C from D resolves it under t = 1
        let mut c = PackingCertificate::plain(vec![0, 3], false);
        assert!(!validate_robust_packing(&g, &zero, &c));
        c.exclusions.insert(3, vec![2]);
        assert!(validate_robust_packing(&g, &ThresholdVector::uniform(5, 1), &c));
        assert!(!validate_robust_packing(&g, &zero, &c));
    }

    #[test]
    fn rounding_is_always_valid() {
        let g = fig1();
        let t = ThresholdVector::zeros(5);
        let dual = robust_dual_multipliers(&g, &t).unwrap();
        let mut rng = seeded(4);
        let mut total = 0;
        for _ in 0..2000 {
            let cert = rounded_robust_packing(&g, &t, 0.5, &dual, &mut rng).unwrap();
            assert!(cert.validate(&g));
            total += cert.size();
        }
        assert!(total as f64 / 2000.0 >= 0.5 / 8.0 * 2.0 * 0.8);
        assert!(rounded_robust_packing(&g, &t, 1.0, &dual, &mut rng).is_err());
    }

    #[test]
    fn fig1_gap_report() {
        let r = gap_report(&fig1(), None, &GapOptions { exact: true, ..Default::default() }).unwrap();
        assert!((r.opt_lp - 2.0).abs() < 1e-9);
        assert_eq!((r.rho, r.gamma), (2, 2));
        assert!(r.rho_exact && r.gamma_exact);
        assert!((r.ratio_opt_n - 0.4).abs() < 1e-9);
        let heur = gap_report(&rook(4), None, &GapOptions::default()).unwrap();
        assert!(!heur.rho_exact && !heur.gamma_exact);
        assert!(heur.rho as f64 <= heur.opt_lp + 1e-9 && heur.opt_lp <= heur.gamma as f64 + 1e-9);
    }

    #[test]
    fn robust_greedy_packing_validates() {
        let g = rook(4);
        for t in 0..4 {
            let tv = ThresholdVector::uniform(16, t);
            let p = maximal_robust_packing(&g, &tv, &PackingOrder::default()).unwrap();
            assert!(p.validate(&g), "t={t}");
            assert!(p.size() >= 1);
        }
    }
}

//! Trust graphs: undirected simple graphs with closed-neighborhood access,
//! SNAP-style edge-list ingestion, and per-vertex mistrust thresholds.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge list contains no edges")]
    Empty,
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("alpha must lie in [0, 1], got {0}")]
    BadAlpha(f64),
    #[error("threshold vector has length {got}, graph has {expected} vertices")]
    ThresholdLength { got: usize, expected: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Input layouts understood by [`parse_edge_list`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeFormat {
    /// Whitespace-separated `u v` pairs, `#` comment lines.
    #[default]
    Snap,
    /// Comma-separated `source,target,rating[,time]` rows; only rows with a
    /// positive rating become edges (signed trust networks).
    SignedCsv,
}

/// Undirected simple graph on vertices `0..n`.
///
/// Adjacency lists are sorted and deduplicated; the relation is symmetric
/// and loop-free. `id_map[i]` is the original label of dense vertex `i`.
#[derive(Clone, PartialEq, Eq)]
pub struct TrustGraph {
    adjacency: Vec<Vec<usize>>,
    id_map: Vec<u64>,
}

impl fmt::Debug for TrustGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrustGraph")
            .field("n", &self.n())
            .field("edges", &self.edge_count())
            .finish()
    }
}

impl TrustGraph {
    /// Builds a graph from an edge list over `0..n`. Self-loops and duplicate
    /// edges are dropped; each pair is symmetrized.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u != v {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self {
            adjacency,
            id_map: (0..n as u64).collect(),
        })
    }

    pub fn edgeless(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
            id_map: (0..n as u64).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn id_map(&self) -> &[u64] {
        &self.id_map
    }

    /// Open neighborhood `N(v)`, sorted. Panics if `v` is out of range.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Closed neighborhood `N[v] = N(v) ∪ {v}`, sorted.
    pub fn closed_neighborhood(&self, v: usize) -> Result<Vec<usize>, GraphError> {
        if v >= self.n() {
            return Err(GraphError::VertexOutOfRange { vertex: v, n: self.n() });
        }
        Ok(self.closed_unchecked(v))
    }

    pub(crate) fn closed_unchecked(&self, v: usize) -> Vec<usize> {
        let adj = &self.adjacency[v];
        let mut out = Vec::with_capacity(adj.len() + 1);
        let split = adj.partition_point(|&u| u < v);
        out.extend_from_slice(&adj[..split]);
        out.push(v);
        out.extend_from_slice(&adj[split..]);
        out
    }

    pub fn degree_vector(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, adj) in self.adjacency.iter().enumerate() {
            out.extend(adj.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    /// Checks symmetry, simplicity and id ranges.
    pub fn validate(&self) -> Result<(), GraphError> {
        let n = self.n();
        if self.id_map.len() != n {
            return Err(GraphError::Invalid("id map length differs from n".into()));
        }
        for (v, adj) in self.adjacency.iter().enumerate() {
            for w in adj.windows(2) {
                if w[0] >= w[1] {
                    return Err(GraphError::Invalid(format!("adjacency of {v} not strictly sorted")));
                }
            }
            for &u in adj {
                if u >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: u, n });
                }
                if u == v {
                    return Err(GraphError::Invalid(format!("self-loop at {v}")));
                }
                if !self.has_edge(u, v) {
                    return Err(GraphError::Invalid(format!("edge {v}-{u} is not symmetric")));
                }
            }
        }
        Ok(())
    }

    /// Disjoint union; vertices of `other` are shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &TrustGraph) -> TrustGraph {
        let shift = self.n();
        let mut adjacency = self.adjacency.clone();
        adjacency.extend(
            other
                .adjacency
                .iter()
                .map(|adj| adj.iter().map(|&u| u + shift).collect::<Vec<_>>()),
        );
        let n = adjacency.len();
        TrustGraph {
            adjacency,
            id_map: (0..n as u64).collect(),
        }
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.n(),
            edges: self.edges().into_iter().map(|(u, v)| [u, v]).collect(),
            id_map: self.id_map.clone(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self, GraphError> {
        let edges: Vec<(usize, usize)> = json.edges.iter().map(|e| (e[0], e[1])).collect();
        let mut g = Self::from_edges(json.n, &edges)?;
        if !json.id_map.is_empty() {
            if json.id_map.len() != json.n {
                return Err(GraphError::Invalid(format!(
                    "id_map has {} entries for {} vertices",
                    json.id_map.len(),
                    json.n
                )));
            }
            g.id_map = json.id_map.clone();
        }
        Ok(g)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("graph json is always serializable")
    }

    pub fn from_json_str(text: &str) -> Result<Self, GraphError> {
        let json: GraphJson = serde_json::from_str(text)?;
        Self::from_json(&json)
    }
}

/// On-disk graph layout: `{n, edges: [[u, v], ...], id_map}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub id_map: Vec<u64>,
}

/// Reads an edge list, relabelling vertex ids densely in first-seen order.
pub fn parse_edge_list<R: BufRead>(reader: R, format: EdgeFormat) -> Result<TrustGraph, GraphError> {
    let mut ids: HashMap<u64, usize> = HashMap::new();
    let mut id_map = Vec::new();
    let mut edges = Vec::new();
    let mut intern = |raw: u64| -> usize {
        *ids.entry(raw).or_insert_with(|| {
            id_map.push(raw);
            id_map.len() - 1
        })
    };

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = match format {
            EdgeFormat::Snap => trimmed.split_whitespace().collect(),
            EdgeFormat::SignedCsv => trimmed.split(',').map(str::trim).collect(),
        };
        let parse_id = |tok: &str| -> Result<u64, GraphError> {
            tok.parse::<u64>().map_err(|_| GraphError::Parse {
                line: lineno,
                message: format!("malformed vertex id {tok:?}"),
            })
        };
        match format {
            EdgeFormat::Snap => {
                if tokens.len() < 2 {
                    return Err(GraphError::Parse {
                        line: lineno,
                        message: format!("expected two vertex ids, found {}", tokens.len()),
                    });
                }
                let u = parse_id(tokens[0])?;
                let v = parse_id(tokens[1])?;
                let (a, b) = (intern(u), intern(v));
                edges.push((a, b));
            }
            EdgeFormat::SignedCsv => {
                if tokens.len() < 3 {
                    return Err(GraphError::Parse {
                        line: lineno,
                        message: format!("expected source,target,rating; found {} fields", tokens.len()),
                    });
                }
                let u = parse_id(tokens[0])?;
                let v = parse_id(tokens[1])?;
                let rating: f64 = tokens[2].parse().map_err(|_| GraphError::Parse {
                    line: lineno,
                    message: format!("malformed rating {:?}", tokens[2]),
                })?;
                // every endpoint is registered, including those only seen in
                // negative ratings, so n matches the published vertex counts
                let (a, b) = (intern(u), intern(v));
                if rating > 0.0 {
                    edges.push((a, b));
                }
            }
        }
    }
    if id_map.is_empty() {
        return Err(GraphError::Empty);
    }
    let mut g = TrustGraph::from_edges(id_map.len(), &edges)?;
    g.id_map = id_map;
    Ok(g)
}

pub fn parse_edge_str(text: &str, format: EdgeFormat) -> Result<TrustGraph, GraphError> {
    parse_edge_list(text.as_bytes(), format)
}

/// Per-vertex count of neighbors that may be compromised.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThresholdVector(pub Vec<usize>);

impl ThresholdVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn uniform(n: usize, t: usize) -> Self {
        Self(vec![t; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&t| t == 0)
    }

    pub fn get(&self, v: usize) -> usize {
        self.0[v]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn check_len(&self, g: &TrustGraph) -> Result<(), GraphError> {
        if self.0.len() != g.n() {
            return Err(GraphError::ThresholdLength { got: self.0.len(), expected: g.n() });
        }
        Ok(())
    }

    /// Caps each entry at the vertex degree: at most `deg(v)` neighbors exist.
    pub fn clamped(&self, g: &TrustGraph) -> ThresholdVector {
        ThresholdVector(
            self.0
                .iter()
                .enumerate()
                .map(|(v, &t)| t.min(g.degree(v)))
                .collect(),
        )
    }

    /// Componentwise sum.
    pub fn plus(&self, other: &ThresholdVector) -> ThresholdVector {
        ThresholdVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn le(&self, other: &ThresholdVector) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

/// `t_v = ⌈α·deg(v)⌉`, evaluated on the exact binary value of `alpha`.
pub fn make_threshold(g: &TrustGraph, alpha: f64) -> Result<ThresholdVector, GraphError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(GraphError::BadAlpha(alpha));
    }
    let (num, den) = decimal_ratio(alpha);
    Ok(ThresholdVector(
        g.degree_vector()
            .into_iter()
            .map(|d| ((d as u128 * num).div_ceil(den)) as usize)
            .collect(),
    ))
}

/// Rational reading of `alpha` used for the ceiling. A value that prints as
/// a short decimal (`0.1`, `0.25`) is taken as that decimal, so `⌈0.1·10⌉`
/// is 1 rather than the 2 that binary rounding of 0.1 would give.
fn decimal_ratio(alpha: f64) -> (u128, u128) {
    let text = format!("{alpha}");
    if let Some((int, frac)) = text.split_once('.') {
        if frac.len() <= 12 && !text.contains('e') {
            let den = 10u128.pow(frac.len() as u32);
            let int: u128 = int.parse().unwrap_or(0);
            let frac: u128 = frac.parse().unwrap_or(0);
            return (int * den + frac, den);
        }
    } else if !text.contains('e') {
        return (text.parse().unwrap_or(0), 1);
    }
    // fall back to a 2^-40 grid, rounded up
    let den = 1u128 << 40;
    ((alpha * den as f64).ceil() as u128, den)
}

/// Dataset registry entry used to validate ingested SNAP files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub name: String,
    pub path: PathBuf,
    #[serde(default)]
    pub format: EdgeFormat,
    #[serde(default)]
    pub expected_n: Option<usize>,
    #[serde(default)]
    pub expected_edges: Option<usize>,
    #[serde(default)]
    pub expected_max_degree: Option<usize>,
}

impl DatasetRecord {
    /// Compares the stored expectations against `g`; returns a description
    /// of each mismatch.
    pub fn mismatches(&self, g: &TrustGraph) -> Vec<String> {
        let mut out = Vec::new();
        let checks = [
            ("n", self.expected_n, g.n()),
            ("edges", self.expected_edges, g.edge_count()),
            ("max degree", self.expected_max_degree, g.max_degree()),
        ];
        for (label, expected, got) in checks {
            if let Some(e) = expected {
                if e != got {
                    out.push(format!("{}: expected {label} {e}, got {got}", self.name));
                }
            }
        }
        out
    }
}

/// Small named graphs used throughout tests and examples.
pub mod fixtures {
    use super::*;

    /// Five-vertex example: A..E = 0..4, edges AB, BC, CD, AC, DE.
    pub fn fig1() -> TrustGraph {
        TrustGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (0, 2), (3, 4)]).unwrap()
    }

    /// Star `K_{1,leaves}` with center 0.
    pub fn star(leaves: usize) -> TrustGraph {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        TrustGraph::from_edges(leaves + 1, &edges).unwrap()
    }

    /// Rook graph on `[k]×[k]`: cells adjacent iff they share a row or column.
    pub fn rook(k: usize) -> TrustGraph {
        let id = |r: usize, c: usize| r * k + c;
        let mut edges = Vec::new();
        for r in 0..k {
            for c in 0..k {
                for c2 in c + 1..k {
                    edges.push((id(r, c), id(r, c2)));
                }
                for r2 in r + 1..k {
                    edges.push((id(r, c), id(r2, c)));
                }
            }
        }
        TrustGraph::from_edges(k * k, &edges).unwrap()
    }

    pub fn cycle(n: usize) -> TrustGraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        TrustGraph::from_edges(n, &edges).unwrap()
    }

    pub fn path(n: usize) -> TrustGraph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        TrustGraph::from_edges(n, &edges).unwrap()
    }

    pub fn complete(n: usize) -> TrustGraph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        TrustGraph::from_edges(n, &edges).unwrap()
    }

    pub fn petersen() -> TrustGraph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        TrustGraph::from_edges(10, &edges).unwrap()
    }

    /// Erdős–Rényi `G(n, p)` from the given generator.
    pub fn gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> TrustGraph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        TrustGraph::from_edges(n, &edges).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn triangle_from_snap_text() {
        let g = parse_edge_str("0 1\n1 2\n2 0\n", EdgeFormat::Snap).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 3);
        g.validate().unwrap();
    }

    #[test]
    fn dedup_self_loop_and_relabel() {
        let g = parse_edge_str("# c\n5 7\n7 5\n5 5\n", EdgeFormat::Snap).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.id_map(), &[5, 7]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_edge_str("0 1\n1 x\n", EdgeFormat::Snap).unwrap_err();
        match err {
            GraphError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_edge_str("0\n", EdgeFormat::Snap), Err(GraphError::Parse { line: 1, .. })));
        assert!(matches!(parse_edge_str("# nothing\n\n", EdgeFormat::Snap), Err(GraphError::Empty)));
        assert!(matches!(parse_edge_str("", EdgeFormat::Snap), Err(GraphError::Empty)));
    }

    #[test]
    fn signed_csv_keeps_positive_ratings() {
        let text = "1,2,4,100\n2,3,-2,101\n3,1,10,102\n";
        let g = parse_edge_str(text, EdgeFormat::SignedCsv).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 2);
        assert!(!g.has_edge(1, 2));
    }

    #[test]
    fn fig1_neighborhoods() {
        let g = fig1();
        assert_eq!(g.closed_neighborhood(0).unwrap(), vec![0, 1, 2]);
        assert_eq!(g.closed_neighborhood(4).unwrap(), vec![3, 4]);
        assert!(matches!(g.closed_neighborhood(5), Err(GraphError::VertexOutOfRange { .. })));
        assert_eq!(TrustGraph::edgeless(3).closed_neighborhood(1).unwrap(), vec![1]);
    }

    #[test]
    fn degree_vectors() {
        assert_eq!(fig1().degree_vector(), vec![2, 2, 3, 2, 1]);
        assert_eq!(star(8).degree(0), 8);
        assert_eq!(TrustGraph::edgeless(4).degree_vector(), vec![0; 4]);
    }

    #[test]
    fn thresholds_from_alpha() {
        let g = fig1();
        assert_eq!(make_threshold(&g, 0.0).unwrap().0, vec![0; 5]);
        assert_eq!(make_threshold(&g, 0.1).unwrap().0, vec![1; 5]);
        assert_eq!(make_threshold(&g, 1.0).unwrap().0, vec![2, 2, 3, 2, 1]);
        assert_eq!(make_threshold(&g, 0.5).unwrap().0, vec![1, 1, 2, 1, 1]);
        assert!(matches!(make_threshold(&g, 1.5), Err(GraphError::BadAlpha(_))));
        assert!(matches!(make_threshold(&g, -0.1), Err(GraphError::BadAlpha(_))));
    }

    #[test]
    fn decimal_alpha_is_exact() {
        // binary 0.1 is slightly above 1/10; the ceiling must still treat it as 1/10
        let g = star(10);
        assert_eq!(make_threshold(&g, 0.1).unwrap().get(0), 1);
        let g = star(20);
        assert_eq!(make_threshold(&g, 0.05).unwrap().get(0), 1);
        assert_eq!(make_threshold(&g, 0.3).unwrap().get(0), 6);
    }

    #[test]
    fn rook_and_petersen_shapes() {
        let g = rook(4);
        assert_eq!(g.n(), 16);
        assert!(g.degree_vector().iter().all(|&d| d == 6));
        let p = petersen();
        assert!(p.degree_vector().iter().all(|&d| d == 3));
        p.validate().unwrap();
    }

    #[test]
    fn json_roundtrip_keeps_id_map() {
        let g = parse_edge_str("10 20\n20 30\n", EdgeFormat::Snap).unwrap();
        let back = TrustGraph::from_json_str(&g.to_json_string()).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.id_map(), &[10, 20, 30]);
    }

    #[test]
    fn disjoint_union_shifts_ids() {
        let g = fig1().disjoint_union(&fig1());
        assert_eq!(g.n(), 10);
        assert_eq!(g.closed_neighborhood(9).unwrap(), vec![8, 9]);
    }
}

//! Semi-regular bilayer connectivity graphs and their row-stochastic
//! polarity-weighted adjacency matrices.
//!
//! Vertices are indexed 0-based: `0..layer1_size` is layer 1, the rest is
//! layer 2. Edges are undirected and stored canonically as `(min, max)`.

use crate::numerics::{eig_symmetric, DenseMatrix, EigenDecomposition, NumericsError};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("infeasible degree profile: {0}")]
    ProfileInfeasible(String),
    #[error("graph is not connected")]
    NotConnected,
    #[error("invalid edge ({u},{v}): {reason}")]
    InvalidEdge { u: usize, v: usize, reason: String },
    #[error("not semi-regular: vertex {vertex} has counts ({n1},{n2}), layer expects ({expected_n1},{expected_n2})")]
    NotSemiRegular {
        vertex: usize,
        n1: usize,
        n2: usize,
        expected_n1: usize,
        expected_n2: usize,
    },
    #[error("polarity weights must be positive: w1={w1}, w2={w2}")]
    NonPositiveWeight { w1: f64, w2: f64 },
    #[error("row normalisation differs between layers ({d1} vs {d2}); the weighted adjacency cannot be both symmetric and row-stochastic")]
    InconsistentNormalization { d1: f64, d2: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, GraphError>;

/// Same-layer / cross-layer neighbour counts, per layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeProfile {
    pub n1_l1: usize,
    pub n2_l1: usize,
    pub n1_l2: usize,
    pub n2_l2: usize,
}

impl DegreeProfile {
    pub fn uniform(n1: usize, n2: usize) -> Self {
        Self {
            n1_l1: n1,
            n2_l1: n2,
            n1_l2: n1,
            n2_l2: n2,
        }
    }

    /// Counts seen from `layer` (1 or 2).
    pub fn for_layer(&self, layer: usize) -> (usize, usize) {
        if layer == 1 {
            (self.n1_l1, self.n2_l1)
        } else {
            (self.n1_l2, self.n2_l2)
        }
    }
}

/// Intra-layer (`w1`) and inter-layer (`w2`) edge weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarityWeights {
    pub w1: f64,
    pub w2: f64,
}

impl PolarityWeights {
    pub fn new(w1: f64, w2: f64) -> Result<Self> {
        if w1 > 0.0 && w2 > 0.0 && w1.is_finite() && w2.is_finite() {
            Ok(Self { w1, w2 })
        } else {
            Err(GraphError::NonPositiveWeight { w1, w2 })
        }
    }
}

/// A connected, semi-regular bilayer graph.
#[derive(Debug, Clone, PartialEq)]
pub struct BilayerGraph {
    layer1_size: usize,
    layer2_size: usize,
    edges: Vec<(usize, usize)>,
    profile: DegreeProfile,
}

impl BilayerGraph {
    /// Validates and canonicalises an edge list into a bilayer graph.
    pub fn new(layer1_size: usize, layer2_size: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = layer1_size + layer2_size;
        let mut canonical = BTreeSet::new();
        for &(u, v) in &edges {
            if u == v {
                return Err(GraphError::InvalidEdge {
                    u,
                    v,
                    reason: "self-loop".to_string(),
                });
            }
            if u >= n || v >= n {
                return Err(GraphError::InvalidEdge {
                    u,
                    v,
                    reason: format!("vertex out of range (N = {n})"),
                });
            }
            let e = (u.min(v), u.max(v));
            if !canonical.insert(e) {
                return Err(GraphError::InvalidEdge {
                    u,
                    v,
                    reason: "duplicate edge".to_string(),
                });
            }
        }
        let edges: Vec<(usize, usize)> = canonical.into_iter().collect();

        let g = Self {
            layer1_size,
            layer2_size,
            edges,
            profile: DegreeProfile::uniform(0, 0),
        };
        if !g.is_connected() {
            return Err(GraphError::NotConnected);
        }
        let profile = g.check_semi_regular()?;
        Ok(Self { profile, ..g })
    }

    pub fn layer1_size(&self) -> usize {
        self.layer1_size
    }

    pub fn layer2_size(&self) -> usize {
        self.layer2_size
    }

    pub fn vertex_count(&self) -> usize {
        self.layer1_size + self.layer2_size
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn profile(&self) -> DegreeProfile {
        self.profile
    }

    /// 1 or 2.
    pub fn layer_of(&self, v: usize) -> usize {
        if v < self.layer1_size {
            1
        } else {
            2
        }
    }

    fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count()];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n == 0 {
            return false;
        }
        let adj = self.adjacency_lists();
        let mut seen = vec![false; n];
        let mut queue = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push(v);
                }
            }
        }
        count == n
    }

    fn check_semi_regular(&self) -> Result<DegreeProfile> {
        let mut counts = vec![(0usize, 0usize); self.vertex_count()];
        for &(u, v) in &self.edges {
            let same = self.layer_of(u) == self.layer_of(v);
            for w in [u, v] {
                if same {
                    counts[w].0 += 1;
                } else {
                    counts[w].1 += 1;
                }
            }
        }
        let layer_counts = |start: usize, size: usize| -> Result<(usize, usize)> {
            if size == 0 {
                return Ok((0, 0));
            }
            let expected = counts[start];
            for v in start..start + size {
                if counts[v] != expected {
                    return Err(GraphError::NotSemiRegular {
                        vertex: v,
                        n1: counts[v].0,
                        n2: counts[v].1,
                        expected_n1: expected.0,
                        expected_n2: expected.1,
                    });
                }
            }
            Ok(expected)
        };
        let (n1_l1, n2_l1) = layer_counts(0, self.layer1_size)?;
        let (n1_l2, n2_l2) = layer_counts(self.layer1_size, self.layer2_size)?;
        Ok(DegreeProfile {
            n1_l1,
            n2_l1,
            n1_l2,
            n2_l2,
        })
    }

    /// Edge list as CSV with a `u,v` header.
    pub fn edges_csv(&self) -> String {
        let mut out = String::from("u,v\n");
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u},{v}\n"));
        }
        out
    }
}

/// Cross-layer offset convention: `{0, +1, -1, +2, -2, ...}` truncated to `n2`.
pub fn default_cross_offsets(n2: usize) -> Vec<i64> {
    let mut offsets = Vec::with_capacity(n2);
    let mut d = 0i64;
    while offsets.len() < n2 {
        if d == 0 {
            offsets.push(0);
        } else {
            offsets.push(d);
            if offsets.len() < n2 {
                offsets.push(-d);
            }
        }
        d += 1;
    }
    offsets
}

fn wrap(i: i64, m: usize) -> usize {
    let m = m as i64;
    (((i % m) + m) % m) as usize
}

/// Builds a bilayer graph where each layer is a ring of `layer_size` vertices
/// connected to its `n1/2` nearest neighbours on each side, with `n2`
/// cross-layer edges per vertex wired by `cross_offsets` (defaults to the
/// `{0, +1, -1, ...}` band).
pub fn build_semi_regular_ring(layer_size: usize, profile: DegreeProfile) -> Result<BilayerGraph> {
    build_ring_with_offsets(layer_size, profile, None)
}

pub fn build_ring_with_offsets(
    layer_size: usize,
    profile: DegreeProfile,
    cross_offsets: Option<&[i64]>,
) -> Result<BilayerGraph> {
    let m = layer_size;
    if m < 3 {
        return Err(GraphError::ProfileInfeasible(format!(
            "layer size {m} below the ring minimum of 3"
        )));
    }
    for (label, n1) in [("layer 1", profile.n1_l1), ("layer 2", profile.n1_l2)] {
        if n1 % 2 != 0 {
            return Err(GraphError::ProfileInfeasible(format!(
                "{label} same-layer count {n1} must be even (ring neighbours pair up)"
            )));
        }
        if n1 >= m {
            return Err(GraphError::ProfileInfeasible(format!(
                "{label} same-layer count {n1} exceeds ring capacity for {m} vertices"
            )));
        }
    }
    if profile.n2_l1 != profile.n2_l2 {
        return Err(GraphError::ProfileInfeasible(format!(
            "equal layer sizes require equal cross-layer counts, got {} and {}",
            profile.n2_l1, profile.n2_l2
        )));
    }
    let n2 = profile.n2_l1;
    if n2 > m {
        return Err(GraphError::ProfileInfeasible(format!(
            "cross-layer count {n2} exceeds layer size {m}"
        )));
    }
    if n2 == 0 {
        return Err(GraphError::NotConnected);
    }
    let default_offsets;
    let offsets: &[i64] = match cross_offsets {
        Some(o) => {
            if o.len() != n2 {
                return Err(GraphError::ProfileInfeasible(format!(
                    "{} cross offsets supplied for cross-layer count {n2}",
                    o.len()
                )));
            }
            o
        }
        None => {
            default_offsets = default_cross_offsets(n2);
            &default_offsets
        }
    };
    {
        let distinct: BTreeSet<usize> = offsets.iter().map(|&o| wrap(o, m)).collect();
        if distinct.len() != n2 {
            return Err(GraphError::ProfileInfeasible(
                "cross offsets collide modulo layer size".to_string(),
            ));
        }
    }

    let mut edges = Vec::new();
    for (start, n1) in [(0usize, profile.n1_l1), (m, profile.n1_l2)] {
        for i in 0..m {
            for d in 1..=(n1 / 2) {
                edges.push((start + i, start + wrap(i as i64 + d as i64, m)));
            }
        }
    }
    for i in 0..m {
        for &o in offsets {
            edges.push((i, m + wrap(i as i64 + o, m)));
        }
    }
    BilayerGraph::new(m, m, edges)
}

/// The bipartite bilayer preset: both layers are rings (`n1 = 2`) joined by a
/// single straight cross edge per vertex (`n2 = 1`). Its biadjacency matrix is
/// cyclic tridiagonal with the cross weight on the diagonal and the ring
/// weight off-diagonal. Requires an even layer size.
pub fn build_bipartite_2d(layer_size: usize) -> Result<BilayerGraph> {
    if layer_size < 4 || layer_size % 2 != 0 {
        return Err(GraphError::ProfileInfeasible(format!(
            "bipartite ring pairing needs an even layer size of at least 4, got {layer_size}"
        )));
    }
    build_ring_with_offsets(layer_size, DegreeProfile::uniform(2, 1), Some(&[0]))
}

/// Row-stochastic, symmetric, polarity-weighted adjacency matrix of a
/// bilayer graph.
#[derive(Debug, Clone)]
pub struct WeightedAdjacency {
    matrix: DenseMatrix,
    graph: BilayerGraph,
    weights: PolarityWeights,
}

impl WeightedAdjacency {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn graph(&self) -> &BilayerGraph {
        &self.graph
    }

    pub fn weights(&self) -> PolarityWeights {
        self.weights
    }

    pub fn spectrum(&self) -> std::result::Result<EigenDecomposition, NumericsError> {
        eig_symmetric(&self.matrix)
    }
}

/// Weighted adjacency with entry `w1 / (n1*w1 + n2*w2)` on same-layer edges
/// and `w2 / (n1*w1 + n2*w2)` on cross-layer edges, using the row vertex's
/// layer profile.
pub fn weighted_adjacency(g: &BilayerGraph, w: PolarityWeights) -> Result<WeightedAdjacency> {
    let p = g.profile();
    let denom = |layer: usize| -> f64 {
        let (n1, n2) = p.for_layer(layer);
        n1 as f64 * w.w1 + n2 as f64 * w.w2
    };
    let d1 = denom(1);
    let d2 = denom(2);
    let has_cross = g
        .edges()
        .iter()
        .any(|&(u, v)| g.layer_of(u) != g.layer_of(v));
    if has_cross && (d1 - d2).abs() > 1e-13 * d1.abs().max(d2.abs()) {
        return Err(GraphError::InconsistentNormalization { d1, d2 });
    }

    let n = g.vertex_count();
    let mut m = DenseMatrix::zeros(n, n);
    for &(u, v) in g.edges() {
        let (lu, lv) = (g.layer_of(u), g.layer_of(v));
        if lu == lv {
            let d = if lu == 1 { d1 } else { d2 };
            m.set(u, v, w.w1 / d);
            m.set(v, u, w.w1 / d);
        } else {
            m.set(u, v, w.w2 / d1);
            m.set(v, u, w.w2 / d1);
        }
    }
    // row-stochastic check is part of the type contract
    for i in 0..n {
        let sum: f64 = m.row(i).iter().sum();
        debug_assert!(
            (sum - 1.0).abs() <= 1e-12,
            "row {i} sums to {sum}, expected 1"
        );
    }
    Ok(WeightedAdjacency {
        matrix: m,
        graph: g.clone(),
        weights: w,
    })
}

/// Structural facts about a bilayer graph.
#[derive(Debug, Clone)]
pub struct StructureReport {
    pub connected: bool,
    pub bipartite: bool,
    /// The two independent sets when bipartite.
    pub bipartition: Option<(Vec<usize>, Vec<usize>)>,
    pub degree_profile: DegreeProfile,
    pub semi_regular: bool,
}

/// Connectivity, bipartiteness (two-colouring breadth-first search) and
/// per-layer regularity of a graph.
pub fn analyze_structure(g: &BilayerGraph) -> StructureReport {
    let n = g.vertex_count();
    let adj = g.adjacency_lists();

    let mut color = vec![-1i8; n];
    let mut bipartite = true;
    let mut queue = std::collections::VecDeque::new();
    color[0] = 0;
    queue.push_back(0usize);
    let mut visited = 1usize;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if color[v] == -1 {
                color[v] = 1 - color[u];
                visited += 1;
                queue.push_back(v);
            } else if color[v] == color[u] {
                bipartite = false;
            }
        }
    }
    let connected = visited == n;
    let bipartition = if bipartite && connected {
        let set0: Vec<usize> = (0..n).filter(|&v| color[v] == 0).collect();
        let set1: Vec<usize> = (0..n).filter(|&v| color[v] == 1).collect();
        Some((set0, set1))
    } else {
        None
    };
    let (semi_regular, degree_profile) = match g.check_semi_regular() {
        Ok(p) => (true, p),
        Err(_) => (false, g.profile()),
    };

    StructureReport {
        connected,
        bipartite: bipartite && connected,
        bipartition,
        degree_profile,
        semi_regular,
    }
}

/// Parses the `u,v` CSV emitted by [`BilayerGraph::edges_csv`].
pub fn parse_edges_csv(text: &str) -> std::result::Result<Vec<(usize, usize)>, String> {
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 && line.trim() == "u,v" {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let u = parts
            .next()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| format!("bad edge line {}: {line}", lineno + 1))?;
        let v = parts
            .next()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| format!("bad edge line {}: {line}", lineno + 1))?;
        edges.push((u, v));
    }
    Ok(edges)
}

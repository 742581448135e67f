//! Equitable-partition machinery: verifying the two-cell laminar partition,
//! reducing weighted adjacencies to their 2x2 quotient form, and lifting the
//! polarity eigenpair back to the large-scale graph.

use crate::graph::WeightedAdjacency;
use crate::numerics::{DenseMatrix, NumericsError};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuotientError {
    #[error("partition does not cover all {expected} vertices (got {got})")]
    BadPartition { expected: usize, got: usize },
    #[error("partition is not equitable: rows {row_a} and {row_b} of layer {layer_from} have sums {sum_a} and {sum_b} into layer {layer_to}")]
    NotEquitable {
        layer_from: usize,
        layer_to: usize,
        row_a: usize,
        row_b: usize,
        sum_a: f64,
        sum_b: f64,
    },
    #[error("value {value} is not an eigenvalue of the adjacency (closest is {closest})")]
    NotInSpectrum { value: f64, closest: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, QuotientError>;

/// Row-sum agreement tolerance for the equitability check.
const EQUITABLE_TOL: f64 = 1e-12;
/// Eigenvalue matching tolerance for retention and position checks.
pub const EIG_MATCH_TOL: f64 = 1e-8;

/// The two-cell laminar partition: vertex index lists per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LaminarPartition {
    layer1: Vec<usize>,
    layer2: Vec<usize>,
}

impl LaminarPartition {
    pub fn new(layer1: Vec<usize>, layer2: Vec<usize>) -> Self {
        Self { layer1, layer2 }
    }

    /// Partition along the graph's stored layer split.
    pub fn from_layers(w: &WeightedAdjacency) -> Self {
        let l1 = w.graph().layer1_size();
        let n = w.graph().vertex_count();
        Self {
            layer1: (0..l1).collect(),
            layer2: (l1..n).collect(),
        }
    }

    pub fn layer1(&self) -> &[usize] {
        &self.layer1
    }

    pub fn layer2(&self) -> &[usize] {
        &self.layer2
    }

    fn cells(&self) -> [&[usize]; 2] {
        [&self.layer1, &self.layer2]
    }

    fn check_covers(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        let mut got = 0usize;
        for &v in self.layer1.iter().chain(&self.layer2) {
            if v >= n || seen[v] {
                return Err(QuotientError::BadPartition { expected: n, got });
            }
            seen[v] = true;
            got += 1;
        }
        if got != n {
            return Err(QuotientError::BadPartition { expected: n, got });
        }
        Ok(())
    }
}

/// The four layer-pair row-sum constants of an equitable partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotientConstants {
    /// `constants[i][j]` is the common row sum from layer `i+1` into layer `j+1`.
    pub constants: [[f64; 2]; 2],
}

/// Checks that every row of layer `i` has the same total weight into layer
/// `j`, for all four ordered layer pairs, and returns the constants.
pub fn verify_equitable(
    w: &WeightedAdjacency,
    p: &LaminarPartition,
) -> Result<QuotientConstants> {
    let m = w.matrix();
    p.check_covers(m.rows())?;
    let cells = p.cells();
    let mut constants = [[0.0; 2]; 2];
    for (i, from) in cells.iter().enumerate() {
        for (j, to) in cells.iter().enumerate() {
            if from.is_empty() {
                continue;
            }
            let row_sum = |u: usize| -> f64 { to.iter().map(|&v| m.get(u, v)).sum() };
            let first = row_sum(from[0]);
            for &u in &from[1..] {
                let s = row_sum(u);
                if (s - first).abs() > EQUITABLE_TOL {
                    return Err(QuotientError::NotEquitable {
                        layer_from: i + 1,
                        layer_to: j + 1,
                        row_a: from[0],
                        row_b: u,
                        sum_a: first,
                        sum_b: s,
                    });
                }
            }
            constants[i][j] = first;
        }
    }
    Ok(QuotientConstants { constants })
}

/// The 2x2 reduced adjacency `[[a, 1-a], [1-b, b]]` of a laminar partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotientAdjacency {
    pub a: f64,
    pub b: f64,
}

impl QuotientAdjacency {
    pub fn new(a: f64, b: f64) -> Self {
        debug_assert!(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0);
        Self { a, b }
    }

    /// Directly from a degree profile and weights, per the closed form
    /// `a = n1*w1 / (n1*w1 + n2*w2)` (and `b` for layer 2).
    pub fn from_profile(
        profile: crate::graph::DegreeProfile,
        weights: crate::graph::PolarityWeights,
    ) -> Self {
        let frac = |n1: usize, n2: usize| {
            let num = n1 as f64 * weights.w1;
            num / (num + n2 as f64 * weights.w2)
        };
        Self {
            a: frac(profile.n1_l1, profile.n2_l1),
            b: frac(profile.n1_l2, profile.n2_l2),
        }
    }

    pub fn matrix(&self) -> DenseMatrix {
        DenseMatrix::from_nested(&[
            vec![self.a, 1.0 - self.a],
            vec![1.0 - self.b, self.b],
        ])
        .expect("finite 2x2")
    }

    /// The polarity-dependent eigenvalue, always the closed form `a + b - 1`.
    pub fn lambda2(&self) -> f64 {
        self.a + self.b - 1.0
    }

    /// Eigenvector paired with `lambda2`: `[1, (b-1)/(1-a)]`.
    pub fn eigvec2(&self) -> [f64; 2] {
        [1.0, (self.b - 1.0) / (1.0 - self.a)]
    }
}

/// Reduces a weighted adjacency through a verified equitable partition.
/// The quotient spectrum `{1, a+b-1}` is retained in the large-scale spectrum.
pub fn reduce_adjacency(
    w: &WeightedAdjacency,
    p: &LaminarPartition,
) -> Result<QuotientAdjacency> {
    let q = verify_equitable(w, p)?;
    Ok(QuotientAdjacency::new(q.constants[0][0], q.constants[1][1]))
}

/// The N x 2 zero/one matrix with ones on layer-1 rows in column 0 and
/// layer-2 rows in column 1; satisfies `W L = L W_bar`.
#[derive(Debug, Clone)]
pub struct LiftingMatrix {
    matrix: DenseMatrix,
}

impl LiftingMatrix {
    pub fn from_partition(p: &LaminarPartition, n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, 2);
        for &v in p.layer1() {
            m.set(v, 0, 1.0);
        }
        for &v in p.layer2() {
            m.set(v, 1, 1.0);
        }
        Self { matrix: m }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    /// Residual of the intertwining relation `W L - L W_bar`.
    pub fn intertwining_residual(&self, w: &WeightedAdjacency, q: &QuotientAdjacency) -> f64 {
        let lhs = w.matrix().matmul(&self.matrix);
        let rhs = self.matrix.matmul(&q.matrix());
        lhs.sub(&rhs).max_abs()
    }

    /// Lifts a 2-vector on the quotient cells to the N vertices.
    pub fn lift(&self, v: [f64; 2]) -> Vec<f64> {
        self.matrix.matvec(&v)
    }
}

/// `L * v2_bar`: the large-scale eigenvector templating laminar patterns,
/// positive on layer 1 and negative on layer 2.
pub fn lift_eigenvector(q: &QuotientAdjacency, l: &LiftingMatrix) -> Vec<f64> {
    l.lift(q.eigvec2())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPosition {
    /// 1-based position in the ascending spectrum; ties resolve low.
    pub index: usize,
    pub is_min: bool,
    pub is_max: bool,
}

/// Locates `lam` in the ascending spectrum of `w` within the matching
/// tolerance.
pub fn spectral_position(w: &WeightedAdjacency, lam: f64) -> Result<SpectralPosition> {
    let spectrum = w.spectrum()?;
    let values = spectrum
        .real_values()
        .expect("symmetric adjacency has a real spectrum");
    position_in_sorted(&values, lam)
}

/// Position of `lam` in an ascending list of eigenvalues.
pub fn position_in_sorted(values: &[f64], lam: f64) -> Result<SpectralPosition> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        let dist = (v - lam).abs();
        if best.map_or(true, |(_, d)| dist < d) {
            best = Some((i, dist));
        }
    }
    let (mut idx, dist) = best.expect("non-empty spectrum");
    if dist > EIG_MATCH_TOL {
        return Err(QuotientError::NotInSpectrum {
            value: lam,
            closest: values[idx],
        });
    }
    // ties resolve to the lowest index among matches
    while idx > 0 && (values[idx - 1] - lam).abs() <= EIG_MATCH_TOL {
        idx -= 1;
    }
    Ok(SpectralPosition {
        index: idx + 1,
        is_min: idx == 0,
        is_max: idx + 1 == values.len(),
    })
}

/// Spectrum CSV `(index, eigenvalue, is_quotient_lambda2)`, ascending; the
/// row matching `lambda2` (lowest tie) is flagged.
pub fn spectrum_csv(values: &[f64], lambda2: f64) -> String {
    let flag_idx = position_in_sorted(values, lambda2)
        .map(|p| p.index)
        .unwrap_or(0);
    let mut out = String::from("index,eigenvalue,is_quotient_lambda2\n");
    for (i, &v) in values.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            i + 1,
            crate::fmt_sig12(v),
            if i + 1 == flag_idx { 1 } else { 0 }
        ));
    }
    out
}

/// Parses [`spectrum_csv`] back into `(index, eigenvalue, is_lambda2)` rows.
pub fn parse_spectrum_csv(text: &str) -> std::result::Result<Vec<(usize, f64, bool)>, String> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(format!("line {}: expected 3 fields", lineno + 1));
        }
        let index = parts[0]
            .parse::<usize>()
            .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        let value = parts[1]
            .parse::<f64>()
            .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        let flag = match parts[2] {
            "0" => false,
            "1" => true,
            other => return Err(format!("line {}: bad flag {other}", lineno + 1)),
        };
        rows.push((index, value, flag));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{
        build_bipartite_2d, build_semi_regular_ring, weighted_adjacency, BilayerGraph,
        DegreeProfile, PolarityWeights,
    };

    fn ring(
        size: usize,
        n1: usize,
        n2: usize,
        w1: f64,
        w2: f64,
    ) -> crate::graph::WeightedAdjacency {
        let g = build_semi_regular_ring(size, DegreeProfile::uniform(n1, n2)).unwrap();
        weighted_adjacency(&g, PolarityWeights::new(w1, w2).unwrap()).unwrap()
    }

    #[test]
    fn built_rings_are_equitable_with_closed_form_constants() {
        let wa = ring(30, 2, 2, 0.02, 1.0);
        let p = LaminarPartition::from_layers(&wa);
        let q = verify_equitable(&wa, &p).unwrap();
        let a = 2.0 * 0.02 / (2.0 * 0.02 + 2.0 * 1.0);
        assert!((q.constants[0][0] - a).abs() < 1e-15);
        assert!((q.constants[0][0] - 0.04 / 2.04).abs() < 1e-12);
        assert!((q.constants[0][1] - (1.0 - a)).abs() < 1e-15);
        assert!((q.constants[1][1] - a).abs() < 1e-15);
    }

    #[test]
    fn broken_regularity_fails_equitability() {
        // removing an edge breaks the graph construction's regularity check
        let g = build_semi_regular_ring(8, DegreeProfile::uniform(2, 2)).unwrap();
        let mut edges = g.edges().to_vec();
        let removed = edges
            .iter()
            .position(|&(u, v)| (u < 8) != (v < 8))
            .unwrap();
        edges.remove(removed);
        assert!(matches!(
            BilayerGraph::new(8, 8, edges),
            Err(crate::graph::GraphError::NotSemiRegular { .. })
        ));

        // a partition that mixes the layers sees unequal row sums, so the
        // verifier reports the offending row pair
        let wa = ring(8, 2, 2, 0.3, 1.0);
        let mut layer1: Vec<usize> = (0..8).collect();
        let mut layer2: Vec<usize> = (8..16).collect();
        layer1[0] = 8;
        layer2[0] = 0;
        let p = LaminarPartition::new(layer1, layer2);
        assert!(matches!(
            verify_equitable(&wa, &p),
            Err(QuotientError::NotEquitable { .. })
        ));
    }

    #[test]
    fn diffusion_reduction_matches_closed_form() {
        let wa = ring(30, 2, 4, 0.6, 1.0);
        let p = LaminarPartition::from_layers(&wa);
        let q = reduce_adjacency(&wa, &p).unwrap();
        assert!((q.a - 1.2 / 5.2).abs() < 1e-12);
        assert!((q.b - 1.2 / 5.2).abs() < 1e-12);
        assert!((q.lambda2() - (2.0 * 1.2 / 5.2 - 1.0)).abs() < 1e-12);
        assert!((q.lambda2() + 0.53846).abs() < 1e-4);
        // spectral retention against the eigensolver
        let vals = wa.spectrum().unwrap().real_values().unwrap();
        assert!(vals.iter().any(|&v| (v - q.lambda2()).abs() < EIG_MATCH_TOL));
        assert!(vals.iter().any(|&v| (v - 1.0).abs() < EIG_MATCH_TOL));
    }

    #[test]
    fn balanced_weights_give_zero_lambda2() {
        let wa = ring(12, 2, 2, 0.7, 0.7);
        let p = LaminarPartition::from_layers(&wa);
        let q = reduce_adjacency(&wa, &p).unwrap();
        assert!((q.a - 0.5).abs() < 1e-15);
        assert!(q.lambda2().abs() < 1e-15);
    }

    #[test]
    fn lifted_eigenvector_satisfies_eigen_relation() {
        let wa = ring(10, 2, 3, 0.3, 1.1);
        let p = LaminarPartition::from_layers(&wa);
        let q = reduce_adjacency(&wa, &p).unwrap();
        let l = LiftingMatrix::from_partition(&p, wa.graph().vertex_count());
        assert!(l.intertwining_residual(&wa, &q) <= 1e-12);
        let v = lift_eigenvector(&q, &l);
        let wv = wa.matrix().matvec(&v);
        let lam = q.lambda2();
        for (lhs, x) in wv.iter().zip(&v) {
            assert!((lhs - lam * x).abs() <= 1e-9);
        }
        for (i, &x) in v.iter().enumerate() {
            if i < 10 {
                assert!(x > 0.0);
            } else {
                assert!(x < 0.0);
            }
        }
    }

    #[test]
    fn symmetric_layers_lift_to_plus_minus_one() {
        let q = QuotientAdjacency::new(0.3, 0.3);
        assert_eq!(q.eigvec2(), [1.0, -1.0]);
        let q2 = QuotientAdjacency::new(0.25, 0.4);
        assert!((q2.eigvec2()[1] + 0.8).abs() < 1e-15);
    }

    #[test]
    fn perron_eigenvalue_sits_at_the_top() {
        let wa = ring(10, 2, 2, 0.5, 1.0);
        let pos = spectral_position(&wa, 1.0).unwrap();
        assert_eq!(pos.index, 20);
        assert!(pos.is_max);
        assert!(!pos.is_min);
    }

    #[test]
    fn strong_polarity_pushes_lambda2_to_the_minimum() {
        let wa = ring(30, 2, 2, 0.1, 1.0);
        let p = LaminarPartition::from_layers(&wa);
        let q = reduce_adjacency(&wa, &p).unwrap();
        let pos = spectral_position(&wa, q.lambda2()).unwrap();
        assert_eq!(pos.index, 1);
        assert!(pos.is_min);
    }

    #[test]
    fn bipartite_lambda2_is_never_minimal() {
        for &(w1, w2) in &[(0.05, 1.0), (0.2, 1.0), (1.5, 0.4), (1.0, 1.0)] {
            let g = build_bipartite_2d(12).unwrap();
            let wa = weighted_adjacency(&g, PolarityWeights::new(w1, w2).unwrap()).unwrap();
            let p = LaminarPartition::from_layers(&wa);
            let q = reduce_adjacency(&wa, &p).unwrap();
            let pos = spectral_position(&wa, q.lambda2()).unwrap();
            assert!(!pos.is_min, "w1={w1} w2={w2}");
        }
    }

    #[test]
    fn missing_eigenvalue_is_reported() {
        let wa = ring(8, 2, 1, 0.5, 1.0);
        let err = spectral_position(&wa, 0.123456).unwrap_err();
        assert!(matches!(err, QuotientError::NotInSpectrum { .. }));
    }

    #[test]
    fn spectrum_csv_flags_lambda2_row_and_round_trips() {
        let values = vec![-0.8, -0.2, 0.4, 1.0];
        let csv = spectrum_csv(&values, -0.8);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "index,eigenvalue,is_quotient_lambda2");
        assert!(lines[1].ends_with(",1"));
        assert!(lines[2].ends_with(",0"));
        let rows = parse_spectrum_csv(&csv).unwrap();
        assert_eq!(rows.len(), 4);
        let reparsed: Vec<f64> = rows.iter().map(|r| r.1).collect();
        assert_eq!(spectrum_csv(&reparsed, -0.8), csv);
    }

    #[test]
    fn partition_must_cover_all_vertices() {
        let wa = ring(6, 2, 1, 0.5, 1.0);
        let p = LaminarPartition::new((0..6).collect(), (6..11).collect());
        assert!(matches!(
            verify_equitable(&wa, &p),
            Err(QuotientError::BadPartition { .. })
        ));
    }

    #[test]
    fn degenerate_partition_dropped_vertex_is_caught() {
        let g = BilayerGraph::new(
            4,
            4,
            vec![
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 0),
                (4, 5),
                (5, 6),
                (6, 7),
                (7, 4),
                (0, 4),
                (1, 5),
                (2, 6),
                (3, 7),
            ],
        )
        .unwrap();
        let wa = weighted_adjacency(&g, PolarityWeights::new(1.0, 1.0).unwrap()).unwrap();
        let p = LaminarPartition::new(vec![0, 1, 2], vec![4, 5, 6, 7]);
        assert!(matches!(
            verify_equitable(&wa, &p),
            Err(QuotientError::BadPartition { .. })
        ));
    }
}

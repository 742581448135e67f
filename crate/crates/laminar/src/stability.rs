//! The analytic pattern conditions: homogeneous-steady-state instability
//! (general, single- and double-signal closed forms), monotone-polarity
//! hypotheses, type-K row-sum checks, large-scale mode analysis, and the
//! polarity-plane sweep behind the region maps.

use crate::graph::{
    weighted_adjacency, BilayerGraph, DegreeProfile, GraphError, PolarityWeights,
    WeightedAdjacency,
};
use crate::interwoven::{interweave, InterwovenError, InterwovenMatrix};
use crate::kinetics::{
    linearize, reflect_to_s2, solve_hss, Kinetics, KineticsError, Linearization,
};
use crate::numerics::{eig_general, eig_symmetric, DenseMatrix, NumericsError};
use crate::quotient::{position_in_sorted, QuotientAdjacency, QuotientError};
use crate::simulate::{integrate, perturb_hss, PatternKind, SimulateError, Tolerances};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("transfer derivative of cell {cell} fits neither admissible sign class")]
    SignClassViolation { cell: usize },
    #[error("eigenvalue product has imaginary residue {imag:e}")]
    ImaginaryResidue { imag: f64 },
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Interwoven(#[from] InterwovenError),
    #[error(transparent)]
    Quotient(#[from] QuotientError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
}

pub type Result<T> = std::result::Result<T, StabilityError>;

/// Product values below this count as a genuine sign change rather than
/// roundoff at the bifurcation boundary.
pub const INSTABILITY_STRICTNESS: f64 = 1e-12;

/// One mode's instability evaluation: the product over `1 - mu` for the
/// eigenvalues `mu` of `diag(lambdas) * DT`. Negative product means the
/// homogeneous state is unstable in this mode.
#[derive(Debug, Clone)]
pub struct ModeCheck {
    pub product: f64,
    pub unstable: bool,
    pub mu: Vec<Complex64>,
}

pub fn instability_condition(dt: &DenseMatrix, lambdas: &[f64]) -> Result<ModeCheck> {
    let r = dt.require_square().map_err(StabilityError::Numerics)?;
    if lambdas.len() != r {
        return Err(StabilityError::BadConfig(format!(
            "{} mode eigenvalues for an {r}x{r} transfer derivative",
            lambdas.len()
        )));
    }
    let m = DenseMatrix::diagonal(lambdas).matmul(dt);
    let mu = eig_general(&m)?.values;
    let mut product = Complex64::new(1.0, 0.0);
    for v in &mu {
        product *= Complex64::new(1.0, 0.0) - v;
    }
    // the characteristic polynomial is real, so the product must be too
    if product.im.abs() > 1e-9 * product.norm().max(1.0) {
        return Err(StabilityError::ImaginaryResidue { imag: product.im });
    }
    Ok(ModeCheck {
        product: product.re,
        unstable: product.re < -INSTABILITY_STRICTNESS,
        mu,
    })
}

/// Single-signal closed form: unstable iff `1 < lambda * t_prime`.
pub fn siso_condition(lambda: f64, t_prime: f64) -> ModeCheck {
    let product = 1.0 - lambda * t_prime;
    ModeCheck {
        product,
        unstable: product < -INSTABILITY_STRICTNESS,
        mu: vec![Complex64::new(lambda * t_prime, 0.0)],
    }
}

/// Two-signal closed form: unstable iff
/// `1 < tr(L DT) - det(L DT)` for `L = diag(lambdas)`.
pub fn dido_condition(dt: &DenseMatrix, lambdas: [f64; 2]) -> ModeCheck {
    let m = DenseMatrix::diagonal(&lambdas).matmul(dt);
    let tr = m.trace();
    let det = m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0);
    let product = 1.0 - tr + det;
    ModeCheck {
        product,
        unstable: product < -INSTABILITY_STRICTNESS,
        mu: vec![],
    }
}

/// The worked example's displayed inequality, evaluated through its factor
/// structure: polarity coefficients `(w1 - 2 w2)/(w1 + 2 w2)` (diffusion,
/// cross count 4) and `(w1 - w2)/(w1 + w2)` (contact, cross count 2) against
/// the diagonal transfer-derivative entries. Unstable iff the value exceeds 1.
#[derive(Debug, Clone, Copy)]
pub struct ExampleCheck {
    pub value: f64,
    pub coefficients: [f64; 2],
    pub unstable: bool,
}

pub fn hill_example_instability(w1: [f64; 2], w2: [f64; 2], lin: &Linearization) -> ExampleCheck {
    let c1 = (w1[0] - 2.0 * w2[0]) / (w1[0] + 2.0 * w2[0]);
    let c2 = (w1[1] - w2[1]) / (w1[1] + w2[1]);
    let value = c1 * lin.dt.get(0, 0) + c2 * lin.dt.get(1, 1);
    ExampleCheck {
        value,
        coefficients: [c1, c2],
        unstable: 1.0 - value < -INSTABILITY_STRICTNESS,
    }
}

/// True iff `n1 * w1 <= n2 * w2` for every layer of every signal mechanism
/// (equivalently `2a - 1 <= 0` and `2b - 1 <= 0`).
pub fn monotone_polarity_check(signals: &[(DegreeProfile, PolarityWeights)]) -> bool {
    signals.iter().all(|(profile, w)| {
        [profile.for_layer(1), profile.for_layer(2)]
            .iter()
            .all(|&(n1, n2)| n1 as f64 * w.w1 <= n2 as f64 * w.w2)
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TypeKReport {
    pub ok: bool,
    /// Minimum over rows of the off-diagonal row sum of the
    /// laminar-transformed Jacobian.
    pub min_row_sum: f64,
}

/// Off-diagonal row sums of `-I + R P diag(DT_i) R` where `R` flips the sign
/// of layer-2 cells. Transfer derivatives must classify S1 or S2; S1 samples
/// are reflected to S2 first. Nonnegative row sums make the laminar-directed
/// flow type K, hence monotone.
pub fn type_k_row_sums(
    p: &InterwovenMatrix,
    dt_samples: &[DenseMatrix],
    layer1_cells: usize,
) -> Result<TypeKReport> {
    let n = p.cells();
    let r = p.signals();
    if dt_samples.len() != n {
        return Err(StabilityError::BadConfig(format!(
            "{} transfer-derivative samples for {n} cells",
            dt_samples.len()
        )));
    }
    let mut reflected = Vec::with_capacity(n);
    for (cell, dt) in dt_samples.iter().enumerate() {
        match reflect_to_s2(dt) {
            Some(s2) => reflected.push(s2),
            None => return Err(StabilityError::SignClassViolation { cell }),
        }
    }
    // slot-wise row sums of each reflected sample
    let mut slot_sums = vec![vec![0.0; r]; n];
    for (j, dt) in reflected.iter().enumerate() {
        for k in 0..r {
            slot_sums[j][k] = dt.row(k).iter().sum();
        }
    }
    let sign = |cell: usize| if cell < layer1_cells { 1.0 } else { -1.0 };
    let mut min_row_sum = f64::INFINITY;
    for k in 0..r {
        let w = &p.constructors()[k];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                let wij = w.get(i, j);
                if wij != 0.0 {
                    acc += sign(i) * sign(j) * wij * slot_sums[j][k];
                }
            }
            min_row_sum = min_row_sum.min(acc);
        }
    }
    Ok(TypeKReport {
        ok: min_row_sum >= -1e-12,
        min_row_sum,
    })
}

/// Simultaneous diagonalization of a commuting family of symmetric matrices:
/// eigenvectors of the first matrix, refined cluster by cluster against the
/// rest. Returns the aligned eigenvalue lists (one per matrix, mode-major) or
/// `None` when the family does not commute to tolerance.
pub fn commuting_mode_eigenvalues(ws: &[&DenseMatrix]) -> Option<Vec<Vec<f64>>> {
    if ws.is_empty() {
        return None;
    }
    let n = ws[0].rows();
    for w in ws {
        if w.rows() != n || w.cols() != n || !w.is_symmetric(1e-10) {
            return None;
        }
    }
    let scale = ws.iter().map(|w| w.max_abs()).fold(1.0_f64, f64::max);
    for (i, a) in ws.iter().enumerate() {
        for b in &ws[i + 1..] {
            let comm = a.matmul(b).sub(&b.matmul(a));
            if comm.max_abs() > 1e-10 * scale * scale.max(1.0) {
                return None;
            }
        }
    }

    let first = eig_symmetric(ws[0]).ok()?;
    let vals = first.real_values()?;
    let mut v = first.vectors?;

    // cluster indices of (numerically) equal eigenvalues
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &lam) in vals.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if (vals[c[0]] - lam).abs() <= 1e-9 => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }

    for w in &ws[1..] {
        let mut next_clusters = Vec::new();
        for cluster in &clusters {
            if cluster.len() == 1 {
                next_clusters.push(cluster.clone());
                continue;
            }
            // diagonalize the restriction of w to the cluster's eigenspace
            let c = cluster.len();
            let mut vc = DenseMatrix::zeros(n, c);
            for (col, &src) in cluster.iter().enumerate() {
                for row in 0..n {
                    vc.set(row, col, v.get(row, src));
                }
            }
            let s = vc.transpose().matmul(&w.matmul(&vc));
            let mut s_sym = s.clone();
            for i in 0..c {
                for j in 0..c {
                    s_sym.set(i, j, 0.5 * (s.get(i, j) + s.get(j, i)));
                }
            }
            let sub = eig_symmetric(&s_sym).ok()?;
            let sub_vals = sub.real_values()?;
            let u = sub.vectors?;
            let rotated = vc.matmul(&u);
            for (col, &dst) in cluster.iter().enumerate() {
                for row in 0..n {
                    v.set(row, dst, rotated.get(row, col));
                }
            }
            // split the cluster by the refined eigenvalues
            let mut sub_cluster: Vec<usize> = vec![cluster[0]];
            for i in 1..c {
                if (sub_vals[i] - sub_vals[i - 1]).abs() <= 1e-9 {
                    sub_cluster.push(cluster[i]);
                } else {
                    next_clusters.push(std::mem::replace(&mut sub_cluster, vec![cluster[i]]));
                }
            }
            next_clusters.push(sub_cluster);
        }
        clusters = next_clusters;
    }

    // read the aligned eigenvalues off the diagonals, verifying the basis
    let mut per_matrix = Vec::with_capacity(ws.len());
    for w in ws {
        let d = v.transpose().matmul(&w.matmul(&v));
        let mut off = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off = off.max(d.get(i, j).abs());
                }
            }
        }
        if off > 1e-8 * scale.max(1.0) {
            return None;
        }
        per_matrix.push((0..n).map(|i| d.get(i, i)).collect());
    }
    Some(per_matrix)
}

/// Maximum real part of `A + B diag(lambdas) C`, the block of the large-scale
/// Jacobian attached to one shared eigenvector.
pub fn block_mode_max_real(lin: &Linearization, lambdas: &[f64]) -> Result<f64> {
    let block = lin
        .a
        .add(&lin.b.matmul(&DenseMatrix::diagonal(lambdas)).matmul(&lin.c));
    Ok(eig_general(&block)?.max_real_part())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LargeScaleRoute {
    /// Per-mode blocks over a shared eigenbasis of commuting adjacencies.
    CommutingModes,
    /// Direct eigenvalues of the full interconnected Jacobian.
    FullJacobian,
}

#[derive(Debug, Clone, Serialize)]
pub struct LargeScaleCheck {
    pub unstable: bool,
    pub max_real_part: f64,
    pub route: LargeScaleRoute,
}

/// Full Jacobian `I_N (x) A + sum_k W_k (x) (B D_k C)` of the interconnected
/// system, sized `n*N`.
pub fn full_jacobian(lin: &Linearization, ws: &[&DenseMatrix]) -> DenseMatrix {
    let n_cells = ws[0].rows();
    let r = ws.len();
    let mut jac = DenseMatrix::identity(n_cells).kronecker(&lin.a);
    for (k, w) in ws.iter().enumerate() {
        let mut d = vec![0.0; r];
        d[k] = 1.0;
        let bdc = lin
            .b
            .matmul(&DenseMatrix::diagonal(&d))
            .matmul(&lin.c);
        jac = jac.add(&w.kronecker(&bdc));
    }
    jac
}

/// Linear stability of the homogeneous state in the large-scale system:
/// through per-mode blocks when the adjacencies commute, otherwise through
/// the full Jacobian spectrum.
pub fn large_scale_instability(
    lin: &Linearization,
    ws: &[&DenseMatrix],
) -> Result<LargeScaleCheck> {
    if let Some(modes) = commuting_mode_eigenvalues(ws) {
        let n = ws[0].rows();
        let mut max_re = f64::NEG_INFINITY;
        for j in 0..n {
            let lambdas: Vec<f64> = modes.iter().map(|per| per[j]).collect();
            max_re = max_re.max(block_mode_max_real(lin, &lambdas)?);
        }
        Ok(LargeScaleCheck {
            unstable: max_re > 1e-9,
            max_real_part: max_re,
            route: LargeScaleRoute::CommutingModes,
        })
    } else {
        let jac = full_jacobian(lin, ws);
        let max_re = eig_general(&jac)?.max_real_part();
        Ok(LargeScaleCheck {
            unstable: max_re > 1e-9,
            max_real_part: max_re,
            route: LargeScaleRoute::FullJacobian,
        })
    }
}

/// Everything the single-point `stability` evaluation reports.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityVerdict {
    /// Max over modes of the negated instability product; positive means
    /// unstable.
    pub instability_margin: f64,
    pub unstable: bool,
    pub monotone_polarity_ok: bool,
    pub lambda2_is_min: Vec<bool>,
    pub type_k_ok: bool,
    pub type_k_min_row_sum: f64,
    pub lambda2: Vec<f64>,
    /// Eigenvalues of `diag(mode) * DT` per quotient mode, as (re, im) pairs.
    pub mode_eigs: Vec<Vec<(f64, f64)>>,
}

/// Evaluates every analytic condition at one weight point of a two-signal
/// bilayer pair.
pub fn evaluate_point<K: Kinetics + ?Sized>(
    kin: &K,
    graphs: [&BilayerGraph; 2],
    w1: [f64; 2],
    w2: [f64; 2],
) -> Result<StabilityVerdict> {
    let hss = solve_hss(kin)?;
    let lin = linearize(kin, &hss.x, &hss.u)?;
    let weights = [
        PolarityWeights::new(w1[0], w2[0])?,
        PolarityWeights::new(w1[1], w2[1])?,
    ];
    let adjacencies: Vec<WeightedAdjacency> = graphs
        .iter()
        .zip(weights)
        .map(|(g, w)| weighted_adjacency(g, w))
        .collect::<std::result::Result<_, _>>()?;

    let quotients: Vec<QuotientAdjacency> = graphs
        .iter()
        .zip(weights)
        .map(|(g, w)| QuotientAdjacency::from_profile(g.profile(), w))
        .collect();
    let lambda2: Vec<f64> = quotients.iter().map(QuotientAdjacency::lambda2).collect();

    let modes: [Vec<f64>; 2] = [vec![1.0; 2], lambda2.clone()];
    let mut margin = f64::NEG_INFINITY;
    let mut unstable = false;
    let mut mode_eigs = Vec::new();
    for mode in &modes {
        let check = instability_condition(&lin.dt, mode)?;
        margin = margin.max(-check.product);
        unstable |= check.unstable;
        mode_eigs.push(check.mu.iter().map(|c| (c.re, c.im)).collect());
    }

    let monotone = monotone_polarity_check(&[
        (graphs[0].profile(), weights[0]),
        (graphs[1].profile(), weights[1]),
    ]);

    let mut lambda2_is_min = Vec::new();
    for (wa, q) in adjacencies.iter().zip(&quotients) {
        let values = wa
            .spectrum()?
            .real_values()
            .expect("symmetric spectrum is real");
        let pos = position_in_sorted(&values, q.lambda2())?;
        lambda2_is_min.push(pos.is_min);
    }

    let p = interweave(adjacencies.iter().map(|w| w.matrix().clone()).collect())?;
    let n_cells = graphs[0].vertex_count();
    let samples = vec![lin.dt.clone(); n_cells];
    let type_k = type_k_row_sums(&p, &samples, graphs[0].layer1_size())?;

    Ok(StabilityVerdict {
        instability_margin: margin,
        unstable,
        monotone_polarity_ok: monotone,
        lambda2_is_min,
        type_k_ok: type_k.ok,
        type_k_min_row_sum: type_k.min_row_sum,
        lambda2,
        mode_eigs,
    })
}

/// `n` logarithmically spaced points over `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CellVerdict {
    pub w1_sig1: f64,
    pub w1_sig2: f64,
    pub margin: f64,
    pub exists: bool,
    pub monotone: bool,
    pub lambda2_min: [bool; 2],
    pub converges: bool,
    pub sim_class: Option<PatternKind>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// Row-major over (axis1 index, axis2 index).
    pub cells: Vec<CellVerdict>,
}

impl SweepGrid {
    pub fn cell(&self, i: usize, j: usize) -> &CellVerdict {
        &self.cells[i * self.axis2.len() + j]
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// Fixed inter-layer weights per signal.
    pub w2: [f64; 2],
    /// Run the full large-scale simulation per cell and classify it.
    pub simulate: Option<SweepSimulation>,
    pub threads: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepSimulation {
    pub seed: u64,
    pub magnitude: f64,
    pub t_max: f64,
    pub tolerances: Tolerances,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis1: log_space(1e-2, 2.0, 60),
            axis2: log_space(1e-2, 2.0, 60),
            w2: [1.0, 1.0],
            simulate: None,
            threads: 1,
        }
    }
}

/// Sweeps the polarity plane `(w1 of signal 1, w1 of signal 2)`: existence
/// (quotient instability), monotone polarity, spectral-minimality of the
/// polarity eigenvalue per graph, and optionally a simulated pattern class.
/// Per-cell failures are recorded in the cell, never aborting the sweep.
pub fn sweep_regions<K: Kinetics>(
    kin: &K,
    graphs: [&BilayerGraph; 2],
    cfg: &SweepConfig,
) -> Result<SweepGrid> {
    if cfg.axis1.is_empty() || cfg.axis2.is_empty() {
        return Err(StabilityError::BadConfig("empty sweep axis".to_string()));
    }
    if cfg.axis1.len() * cfg.axis2.len() > 10_000 {
        return Err(StabilityError::BadConfig(format!(
            "grid of {} points exceeds the 10^4 cap",
            cfg.axis1.len() * cfg.axis2.len()
        )));
    }
    let hss = solve_hss(kin)?;
    let lin = linearize(kin, &hss.x, &hss.u)?;

    // the minimality flag for graph k depends only on its own axis value
    let min_flags = |g: &BilayerGraph, axis: &[f64], w2: f64| -> Vec<std::result::Result<bool, String>> {
        axis.iter()
            .map(|&w1| {
                let weights =
                    PolarityWeights::new(w1, w2).map_err(|e| e.to_string())?;
                let wa = weighted_adjacency(g, weights).map_err(|e| e.to_string())?;
                let q = QuotientAdjacency::from_profile(g.profile(), weights);
                let values = wa
                    .spectrum()
                    .map_err(|e| e.to_string())?
                    .real_values()
                    .ok_or("complex spectrum")?;
                position_in_sorted(&values, q.lambda2())
                    .map(|p| p.is_min)
                    .map_err(|e| e.to_string())
            })
            .collect()
    };
    let flags1 = min_flags(graphs[0], &cfg.axis1, cfg.w2[0]);
    let flags2 = min_flags(graphs[1], &cfg.axis2, cfg.w2[1]);

    let n1 = cfg.axis1.len();
    let n2 = cfg.axis2.len();
    let eval_cell = |i: usize, j: usize| -> CellVerdict {
        let w11 = cfg.axis1[i];
        let w12 = cfg.axis2[j];
        let mut cell = CellVerdict {
            w1_sig1: w11,
            w1_sig2: w12,
            margin: f64::NAN,
            exists: false,
            monotone: false,
            lambda2_min: [false, false],
            converges: false,
            sim_class: None,
            error: None,
        };
        let mut inner = || -> Result<()> {
            let weights = [
                PolarityWeights::new(w11, cfg.w2[0])?,
                PolarityWeights::new(w12, cfg.w2[1])?,
            ];
            let q1 = QuotientAdjacency::from_profile(graphs[0].profile(), weights[0]);
            let q2 = QuotientAdjacency::from_profile(graphs[1].profile(), weights[1]);
            let mode = [q1.lambda2(), q2.lambda2()];
            let check = instability_condition(&lin.dt, &mode)?;
            cell.margin = -check.product;
            cell.exists = check.unstable;
            cell.monotone = monotone_polarity_check(&[
                (graphs[0].profile(), weights[0]),
                (graphs[1].profile(), weights[1]),
            ]);
            let m1 = flags1[i].clone().map_err(StabilityError::BadConfig)?;
            let m2 = flags2[j].clone().map_err(StabilityError::BadConfig)?;
            cell.lambda2_min = [m1, m2];
            cell.converges = cell.exists && cell.monotone && m1 && m2;
            if let Some(sim) = &cfg.simulate {
                let adj1 = weighted_adjacency(graphs[0], weights[0])?;
                let adj2 = weighted_adjacency(graphs[1], weights[1])?;
                let p = interweave(vec![adj1.matrix().clone(), adj2.matrix().clone()])?;
                let init =
                    perturb_hss(&hss.x, graphs[0].vertex_count(), sim.magnitude, sim.seed)?;
                let traj = integrate(kin, &p, &init, sim.t_max, &sim.tolerances)?;
                let class = crate::simulate::classify_pattern(
                    traj.final_state(),
                    kin.state_dim(),
                    graphs[0].layer1_size(),
                    &hss.x,
                    0,
                );
                cell.sim_class = Some(class.class);
            }
            Ok(())
        };
        if let Err(e) = inner() {
            cell.error = Some(e.to_string());
        }
        cell
    };

    let total = n1 * n2;
    let threads = cfg.threads.max(1).min(total);
    let mut cells: Vec<Option<CellVerdict>> = (0..total).map(|_| None).collect();
    if threads == 1 {
        for (idx, slot) in cells.iter_mut().enumerate() {
            *slot = Some(eval_cell(idx / n2, idx % n2));
        }
    } else {
        let chunk = total.div_ceil(threads);
        let eval_ref = &eval_cell;
        std::thread::scope(|scope| {
            for (c, slice) in cells.chunks_mut(chunk).enumerate() {
                let base = c * chunk;
                scope.spawn(move || {
                    for (off, slot) in slice.iter_mut().enumerate() {
                        let idx = base + off;
                        *slot = Some(eval_ref(idx / n2, idx % n2));
                    }
                });
            }
        });
    }
    Ok(SweepGrid {
        axis1: cfg.axis1.clone(),
        axis2: cfg.axis2.clone(),
        cells: cells.into_iter().map(|c| c.expect("cell evaluated")).collect(),
    })
}

/// Sweep export `(w1_sig1, w1_sig2, margin, exists, converges, sim_class)`.
pub fn sweep_csv(grid: &SweepGrid) -> String {
    let mut out = String::from("w1_sig1,w1_sig2,margin,exists,converges,sim_class\n");
    for cell in &grid.cells {
        let class = match cell.sim_class {
            Some(PatternKind::Homogeneous) => "homogeneous",
            Some(PatternKind::Laminar) => "laminar",
            Some(PatternKind::Other) => "other",
            None => "",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            crate::fmt_sig12(cell.w1_sig1),
            crate::fmt_sig12(cell.w1_sig2),
            crate::fmt_sig12(cell.margin),
            u8::from(cell.exists),
            u8::from(cell.converges),
            class
        ));
    }
    out
}

/// Parses the tuple columns of [`sweep_csv`] back.
pub fn parse_sweep_csv(
    text: &str,
) -> std::result::Result<Vec<(f64, f64, f64, bool, bool, Option<PatternKind>)>, String> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 6 {
            return Err(format!("line {}: expected 6 fields", lineno + 1));
        }
        let f = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", lineno + 1));
        let b = |s: &str| match s {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(format!("line {}: bad flag {s}", lineno + 1)),
        };
        let class = match parts[5] {
            "" => None,
            "homogeneous" => Some(PatternKind::Homogeneous),
            "laminar" => Some(PatternKind::Laminar),
            "other" => Some(PatternKind::Other),
            other => return Err(format!("line {}: bad class {other}", lineno + 1)),
        };
        rows.push((f(parts[0])?, f(parts[1])?, f(parts[2])?, b(parts[3])?, b(parts[4])?, class));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_semi_regular_ring;
    use crate::kinetics::HillCrosstalk;

    fn worked_linearization() -> Linearization {
        let kin = HillCrosstalk::default();
        let hss = solve_hss(&kin).unwrap();
        linearize(&kin, &hss.x, &hss.u).unwrap()
    }

    fn worked_graphs() -> (BilayerGraph, BilayerGraph) {
        (
            build_semi_regular_ring(30, DegreeProfile::uniform(2, 4)).unwrap(),
            build_semi_regular_ring(30, DegreeProfile::uniform(2, 2)).unwrap(),
        )
    }

    #[test]
    fn no_coupling_is_stable() {
        let dt = DenseMatrix::zeros(2, 2);
        let check = instability_condition(&dt, &[1.0, 1.0]).unwrap();
        assert!((check.product - 1.0).abs() < 1e-15);
        assert!(!check.unstable);
    }

    #[test]
    fn scalar_case_matches_hand_arithmetic() {
        // lambda = -0.9, T' = -2: product = 1 - 1.8 = -0.8 < 0
        let check = siso_condition(-0.9, -2.0);
        assert!((check.product + 0.8).abs() < 1e-15);
        assert!(check.unstable);
        let dt = DenseMatrix::from_nested(&[vec![-2.0]]).unwrap();
        let general = instability_condition(&dt, &[-0.9]).unwrap();
        assert!((general.product - check.product).abs() < 1e-12);
    }

    #[test]
    fn worked_example_region_membership() {
        let lin = worked_linearization();
        let point = |w11: f64, w12: f64| {
            let q1 = QuotientAdjacency::from_profile(
                DegreeProfile::uniform(2, 4),
                PolarityWeights::new(w11, 1.0).unwrap(),
            );
            let q2 = QuotientAdjacency::from_profile(
                DegreeProfile::uniform(2, 2),
                PolarityWeights::new(w12, 1.0).unwrap(),
            );
            instability_condition(&lin.dt, &[q1.lambda2(), q2.lambda2()]).unwrap()
        };
        assert!(point(0.6, 0.02).unstable, "inside the pattern region");
        assert!(!point(1.5, 0.15).unstable, "outside the pattern region");
    }

    #[test]
    fn example_route_agrees_with_generic_route() {
        let lin = worked_linearization();
        for &(w11, w12) in &[(0.6, 0.02), (1.5, 0.15), (0.4, 0.1), (1.5, 0.05), (0.05, 1.9)] {
            let example = hill_example_instability([w11, w12], [1.0, 1.0], &lin);
            let q1 = QuotientAdjacency::from_profile(
                DegreeProfile::uniform(2, 4),
                PolarityWeights::new(w11, 1.0).unwrap(),
            );
            let q2 = QuotientAdjacency::from_profile(
                DegreeProfile::uniform(2, 2),
                PolarityWeights::new(w12, 1.0).unwrap(),
            );
            let generic = instability_condition(&lin.dt, &[q1.lambda2(), q2.lambda2()]).unwrap();
            assert!(
                (generic.product - (1.0 - example.value)).abs() <= 1e-9,
                "at ({w11},{w12}): {} vs {}",
                generic.product,
                1.0 - example.value
            );
            assert_eq!(generic.unstable, example.unstable);
        }
    }

    #[test]
    fn zero_coupling_coefficients_are_stable() {
        let lin = worked_linearization();
        // w1 = 2 w2 (diffusion) and w1 = w2 (contact) zero both brackets
        let check = hill_example_instability([2.0, 1.0], [1.0, 1.0], &lin);
        assert!(check.coefficients[0].abs() < 1e-15);
        assert!(check.coefficients[1].abs() < 1e-15);
        assert!(check.value.abs() < 1e-15);
        assert!(!check.unstable);
    }

    #[test]
    fn monotone_brackets_match_polarity_check() {
        let lin = worked_linearization();
        let profiles = [DegreeProfile::uniform(2, 4), DegreeProfile::uniform(2, 2)];
        for &(w11, w12) in &[(0.4, 0.1), (1.9, 0.5), (2.5, 1.5), (1.0, 1.0), (0.01, 1.99)] {
            let check = hill_example_instability([w11, w12], [1.0, 1.0], &lin);
            let signals = [
                (profiles[0], PolarityWeights::new(w11, 1.0).unwrap()),
                (profiles[1], PolarityWeights::new(w12, 1.0).unwrap()),
            ];
            let both_nonpositive =
                check.coefficients[0] <= 1e-15 && check.coefficients[1] <= 1e-15;
            assert_eq!(both_nonpositive, monotone_polarity_check(&signals));
        }
    }

    #[test]
    fn closed_forms_agree_with_product_condition() {
        let mut seed = 0xfeed_u64;
        let mut next = move || {
            seed = seed.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = seed;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^= z >> 31;
            ((z >> 11) as f64) / ((1u64 << 53) as f64) * 4.0 - 2.0
        };
        for _ in 0..100 {
            let dt = DenseMatrix::from_nested(&[
                vec![next(), next()],
                vec![next(), next()],
            ])
            .unwrap();
            let lams = [next(), next()];
            let general = instability_condition(&dt, &lams).unwrap();
            let closed = dido_condition(&dt, lams);
            assert!((general.product - closed.product).abs() <= 1e-10);
            // r = 1
            let t = next();
            let lam = next();
            let dt1 = DenseMatrix::from_nested(&[vec![t]]).unwrap();
            let g1 = instability_condition(&dt1, &[lam]).unwrap();
            let c1 = siso_condition(lam, t);
            assert!((g1.product - c1.product).abs() <= 1e-10);
        }
    }

    #[test]
    fn cross_layer_only_signalling_is_type_k() {
        // no same-layer edges: every row-sum term carries the cross sign
        let g = build_semi_regular_ring(6, DegreeProfile::uniform(0, 2)).unwrap();
        let wa = weighted_adjacency(&g, PolarityWeights::new(0.5, 1.0).unwrap()).unwrap();
        let p = interweave(vec![wa.matrix().clone(), wa.matrix().clone()]).unwrap();
        let lin = worked_linearization();
        let samples = vec![lin.dt.clone(); 12];
        let report = type_k_row_sums(&p, &samples, 6).unwrap();
        assert!(report.ok, "min row sum {}", report.min_row_sum);
    }

    #[test]
    fn worked_example_point_is_type_k() {
        let (g1, g2) = worked_graphs();
        let wa1 = weighted_adjacency(&g1, PolarityWeights::new(0.4, 1.0).unwrap()).unwrap();
        let wa2 = weighted_adjacency(&g2, PolarityWeights::new(0.1, 1.0).unwrap()).unwrap();
        let p = interweave(vec![wa1.matrix().clone(), wa2.matrix().clone()]).unwrap();
        let lin = worked_linearization();
        let samples = vec![lin.dt.clone(); 60];
        let report = type_k_row_sums(&p, &samples, 30).unwrap();
        assert!(report.ok, "min row sum {}", report.min_row_sum);
    }

    #[test]
    fn zero_transfer_derivative_is_type_k() {
        let (g1, g2) = worked_graphs();
        let wa1 = weighted_adjacency(&g1, PolarityWeights::new(0.4, 1.0).unwrap()).unwrap();
        let wa2 = weighted_adjacency(&g2, PolarityWeights::new(0.1, 1.0).unwrap()).unwrap();
        let p = interweave(vec![wa1.matrix().clone(), wa2.matrix().clone()]).unwrap();
        // all-zero transfer derivatives are not classifiable; use an S2 matrix
        // scaled to zero row sums instead of a literal zero matrix
        let dt = DenseMatrix::from_nested(&[vec![-1e-30, -1e-30], vec![-1e-30, -1e-30]])
            .unwrap();
        let samples = vec![dt; 60];
        let err = type_k_row_sums(&p, &samples, 30);
        // entries below the sign-zero tolerance leave the matrix reducible
        assert!(matches!(
            err,
            Err(StabilityError::SignClassViolation { .. })
        ));
        // an S2 sample with vanishing row sums passes with row sums ~ 0
        let dt = DenseMatrix::from_nested(&[vec![-1e-9, -1e-9], vec![-1e-9, -1e-9]]).unwrap();
        let samples = vec![dt; 60];
        let report = type_k_row_sums(&p, &samples, 30).unwrap();
        assert!(report.ok);
        assert!(report.min_row_sum.abs() < 1e-8);
    }

    #[test]
    fn strong_intra_layer_weights_break_type_k() {
        let (g1, g2) = worked_graphs();
        let wa1 = weighted_adjacency(&g1, PolarityWeights::new(10.0, 1.0).unwrap()).unwrap();
        let wa2 = weighted_adjacency(&g2, PolarityWeights::new(10.0, 1.0).unwrap()).unwrap();
        let p = interweave(vec![wa1.matrix().clone(), wa2.matrix().clone()]).unwrap();
        let lin = worked_linearization();
        let samples = vec![lin.dt.clone(); 60];
        let report = type_k_row_sums(&p, &samples, 30).unwrap();
        assert!(!report.ok);
        assert!(report.min_row_sum < 0.0);
    }

    #[test]
    fn worked_adjacency_pair_commutes_and_modes_match_quotient() {
        let (g1, g2) = worked_graphs();
        let wa1 = weighted_adjacency(&g1, PolarityWeights::new(0.6, 1.0).unwrap()).unwrap();
        let wa2 = weighted_adjacency(&g2, PolarityWeights::new(0.02, 1.0).unwrap()).unwrap();
        let modes = commuting_mode_eigenvalues(&[wa1.matrix(), wa2.matrix()]).unwrap();
        assert_eq!(modes.len(), 2);
        assert_eq!(modes[0].len(), 60);
        // the Perron pair (1, 1) appears among the aligned modes
        let has_perron = (0..60)
            .any(|j| (modes[0][j] - 1.0).abs() < 1e-9 && (modes[1][j] - 1.0).abs() < 1e-9);
        assert!(has_perron);
        // the quotient pair (lambda2_1, lambda2_2) appears as an aligned mode
        let q1 = QuotientAdjacency::from_profile(
            g1.profile(),
            PolarityWeights::new(0.6, 1.0).unwrap(),
        );
        let q2 = QuotientAdjacency::from_profile(
            g2.profile(),
            PolarityWeights::new(0.02, 1.0).unwrap(),
        );
        let has_quotient_pair = (0..60).any(|j| {
            (modes[0][j] - q1.lambda2()).abs() < 1e-8
                && (modes[1][j] - q2.lambda2()).abs() < 1e-8
        });
        assert!(has_quotient_pair);
    }

    #[test]
    fn quotient_instability_implies_large_scale_instability() {
        let (g1, g2) = worked_graphs();
        let lin = worked_linearization();
        for &(w11, w12) in &[(0.6, 0.02), (0.4, 0.1), (0.2, 0.03), (1.5, 0.05), (1.5, 0.15)] {
            let pw1 = PolarityWeights::new(w11, 1.0).unwrap();
            let pw2 = PolarityWeights::new(w12, 1.0).unwrap();
            let q1 = QuotientAdjacency::from_profile(g1.profile(), pw1);
            let q2 = QuotientAdjacency::from_profile(g2.profile(), pw2);
            let quotient_unstable = instability_condition(&lin.dt, &[q1.lambda2(), q2.lambda2()])
                .unwrap()
                .unstable;
            let wa1 = weighted_adjacency(&g1, pw1).unwrap();
            let wa2 = weighted_adjacency(&g2, pw2).unwrap();
            let check = large_scale_instability(&lin, &[wa1.matrix(), wa2.matrix()]).unwrap();
            assert_eq!(check.route, LargeScaleRoute::CommutingModes);
            if quotient_unstable {
                assert!(check.unstable, "quotient unstable at ({w11},{w12}) but large scale stable");
            }
        }
    }

    #[test]
    fn full_jacobian_route_agrees_with_commuting_route() {
        // small instance keeps the dense eigensolve cheap
        let g1 = build_semi_regular_ring(5, DegreeProfile::uniform(2, 3)).unwrap();
        let g2 = build_semi_regular_ring(5, DegreeProfile::uniform(2, 1)).unwrap();
        let lin = worked_linearization();
        let wa1 = weighted_adjacency(&g1, PolarityWeights::new(0.3, 1.0).unwrap()).unwrap();
        let wa2 = weighted_adjacency(&g2, PolarityWeights::new(0.05, 1.0).unwrap()).unwrap();
        let ws = [wa1.matrix(), wa2.matrix()];
        let commuting = large_scale_instability(&lin, &ws).unwrap();
        let jac = full_jacobian(&lin, &ws);
        let direct = eig_general(&jac).unwrap().max_real_part();
        assert!((commuting.max_real_part - direct).abs() <= 1e-7);
    }

    #[test]
    fn verdict_at_the_convergence_point() {
        let kin = HillCrosstalk::default();
        let (g1, g2) = worked_graphs();
        let verdict = evaluate_point(&kin, [&g1, &g2], [0.4, 0.1], [1.0, 1.0]).unwrap();
        assert!(verdict.unstable);
        assert!(verdict.monotone_polarity_ok);
        assert_eq!(verdict.lambda2_is_min, vec![true, true]);
        assert!(verdict.type_k_ok);
        assert!(verdict.instability_margin > 0.0);
    }

    #[test]
    fn sweep_covers_figure_points() {
        let kin = HillCrosstalk::default();
        let (g1, g2) = worked_graphs();
        let cfg = SweepConfig {
            axis1: vec![0.4, 1.5],
            axis2: vec![0.05, 0.1, 0.15],
            w2: [1.0, 1.0],
            simulate: None,
            threads: 2,
        };
        let grid = sweep_regions(&kin, [&g1, &g2], &cfg).unwrap();
        let at = |w11: f64, w12: f64| {
            grid.cells
                .iter()
                .find(|c| (c.w1_sig1 - w11).abs() < 1e-12 && (c.w1_sig2 - w12).abs() < 1e-12)
                .unwrap()
        };
        let convergent = at(0.4, 0.1);
        assert!(convergent.exists && convergent.converges);
        let existence_only = at(1.5, 0.05);
        assert!(existence_only.exists && !existence_only.converges);
        assert!(!existence_only.lambda2_min[0]);
        let outside = at(1.5, 0.15);
        assert!(!outside.exists && !outside.converges);
        // deterministic CSV and parse round trip
        let csv = sweep_csv(&grid);
        let csv2 = sweep_csv(&sweep_regions(&kin, [&g1, &g2], &cfg).unwrap());
        assert_eq!(csv, csv2);
        let rows = parse_sweep_csv(&csv).unwrap();
        assert_eq!(rows.len(), grid.cells.len());
        for (row, cell) in rows.iter().zip(&grid.cells) {
            assert_eq!(row.3, cell.exists);
            assert_eq!(row.4, cell.converges);
        }
    }

    #[test]
    fn simulation_enabled_sweep_classifies_cells() {
        let kin = HillCrosstalk::default();
        let g1 = build_semi_regular_ring(5, DegreeProfile::uniform(2, 3)).unwrap();
        let g2 = build_semi_regular_ring(5, DegreeProfile::uniform(2, 1)).unwrap();
        let cfg = SweepConfig {
            axis1: vec![0.05, 1.8],
            axis2: vec![0.05, 1.8],
            w2: [1.0, 1.0],
            simulate: Some(SweepSimulation {
                seed: 1,
                magnitude: 0.01,
                t_max: 1000.0,
                tolerances: crate::simulate::Tolerances::default(),
            }),
            threads: 2,
        };
        let grid = sweep_regions(&kin, [&g1, &g2], &cfg).unwrap();
        assert!(grid.cells.iter().all(|c| c.error.is_none()));
        assert!(grid.cells.iter().all(|c| c.sim_class.is_some()));
        // strong polarity corner patterns, weak polarity corner stays uniform
        let strong = grid.cell(0, 0);
        assert!(strong.exists);
        assert_eq!(strong.sim_class, Some(crate::simulate::PatternKind::Laminar));
        // outside the laminar existence region the simulation may settle on
        // homogeneity or on a fine-grain state, but not on laminar layers
        let weak = grid.cell(1, 1);
        assert!(!weak.exists);
        assert_ne!(weak.sim_class, Some(crate::simulate::PatternKind::Laminar));
        // classified cells land in the csv column
        let csv = sweep_csv(&grid);
        assert!(csv.contains(",laminar"));
    }

    #[test]
    fn cell_failures_are_recorded_without_aborting() {
        let kin = HillCrosstalk::default();
        let (g1, g2) = worked_graphs();
        let cfg = SweepConfig {
            // a non-positive axis value cannot form polarity weights
            axis1: vec![0.5, -1.0],
            axis2: vec![0.1],
            w2: [1.0, 1.0],
            simulate: None,
            threads: 1,
        };
        let grid = sweep_regions(&kin, [&g1, &g2], &cfg).unwrap();
        assert_eq!(grid.cells.len(), 2);
        assert!(grid.cell(0, 0).error.is_none());
        assert!(grid.cell(1, 0).error.is_some());
        // the grid cap is enforced up front
        let cfg = SweepConfig {
            axis1: vec![1.0; 101],
            axis2: vec![1.0; 101],
            ..SweepConfig::default()
        };
        assert!(matches!(
            sweep_regions(&kin, [&g1, &g2], &cfg),
            Err(StabilityError::BadConfig(_))
        ));
    }

    #[test]
    fn log_spaced_axis_is_monotone() {
        let axis = log_space(1e-2, 2.0, 60);
        assert_eq!(axis.len(), 60);
        assert!((axis[0] - 1e-2).abs() < 1e-15);
        assert!((axis[59] - 2.0).abs() < 1e-12);
        assert!(axis.windows(2).all(|w| w[0] < w[1]));
    }
}

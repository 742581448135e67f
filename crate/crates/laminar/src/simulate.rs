//! Full-tissue ODE integration: seeded perturbations of the homogeneous
//! steady state, an embedded Dormand-Prince 4(5) adaptive integrator over the
//! interconnected system, checkpoint-based convergence detection and
//! steady-state pattern classification.

use crate::interwoven::InterwovenMatrix;
use crate::kinetics::Kinetics;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulateError {
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("perturbation magnitude {0} outside (0, 0.1]")]
    BadMagnitude(f64),
    #[error("step size underflow at t = {t}: h = {h:e}")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

pub type Result<T> = std::result::Result<T, SimulateError>;

/// Splitmix-style 64-bit mixing generator; fixed by algorithm so identical
/// seeds reproduce identical initial conditions everywhere.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [-1, 1].
    pub fn next_pm1(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }
}

/// Replicates `x0` over `n_cells` cells with componentwise relative
/// perturbation `x0 * (1 + magnitude * xi)`, `xi` uniform in [-1, 1].
pub fn perturb_hss(x0: &[f64], n_cells: usize, magnitude: f64, seed: u64) -> Result<Vec<f64>> {
    if !(magnitude > 0.0 && magnitude <= 0.1) {
        return Err(SimulateError::BadMagnitude(magnitude));
    }
    let mut rng = SplitMix64::new(seed);
    let mut state = Vec::with_capacity(n_cells * x0.len());
    for _ in 0..n_cells {
        for &v in x0 {
            state.push(v * (1.0 + magnitude * rng.next_pm1()));
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-9,
            initial_step: 1e-3,
            max_step: 0.5,
        }
    }
}

/// Componentwise change below which the trajectory counts as converged, over
/// the last four checkpoint-to-checkpoint steps.
pub const CONVERGENCE_DELTA: f64 = 1e-4;
const CONVERGENCE_WINDOW: usize = 4;
/// Stationarity guard on the stopping rule: small checkpoint deltas alone can
/// be produced by a slowly growing unstable mode still near the homogeneous
/// state, so convergence additionally requires the vector field itself to be
/// this flat.
pub const CONVERGENCE_RHS_TOL: f64 = 1e-7;
/// Spacing of the convergence checkpoints, in time units.
pub const CHECKPOINT_SPACING: f64 = 1.0;
const MIN_STEP: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Full state (n_cells * state_dim) at each checkpoint.
    pub states: Vec<Vec<f64>>,
    pub converged: bool,
    pub converged_at: Option<f64>,
    /// Seed of the perturbation that produced the initial state, when known.
    pub seed: Option<u64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("at least the initial checkpoint")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

// Dormand-Prince 5(4) tableau; the stage times are not needed for an
// autonomous right-hand side.
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// The interconnected right-hand side `dx_i = f(x_i, u_i)` with
/// `u = P h(x)` evaluated through the constructor route.
pub struct CoupledSystem<'a, K: Kinetics + ?Sized> {
    kinetics: &'a K,
    interconnection: &'a InterwovenMatrix,
    n_cells: usize,
}

impl<'a, K: Kinetics + ?Sized> CoupledSystem<'a, K> {
    pub fn new(kinetics: &'a K, interconnection: &'a InterwovenMatrix) -> Result<Self> {
        let r = kinetics.signal_dim();
        if interconnection.signals() != r {
            return Err(SimulateError::DimensionMismatch {
                context: format!(
                    "kinetics has {r} signals, interconnection has {}",
                    interconnection.signals()
                ),
            });
        }
        Ok(Self {
            kinetics,
            interconnection,
            n_cells: interconnection.cells(),
        })
    }

    pub fn state_len(&self) -> usize {
        self.n_cells * self.kinetics.state_dim()
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn rhs(&self, state: &[f64], out: &mut [f64]) {
        let n = self.kinetics.state_dim();
        let r = self.kinetics.signal_dim();
        let mut outputs = vec![0.0; self.n_cells * r];
        for i in 0..self.n_cells {
            self.kinetics
                .output(&state[i * n..(i + 1) * n], &mut outputs[i * r..(i + 1) * r]);
        }
        let inputs = self.interconnection.apply(&outputs);
        for i in 0..self.n_cells {
            self.kinetics.derivative(
                &state[i * n..(i + 1) * n],
                &inputs[i * r..(i + 1) * r],
                &mut out[i * n..(i + 1) * n],
            );
        }
    }
}

/// Integrates the interconnected system to `t_max` with checkpoints every
/// time unit, stopping early once the last four checkpoint deltas all fall
/// below the convergence threshold and the vector field is stationary to
/// [`CONVERGENCE_RHS_TOL`].
pub fn integrate<K: Kinetics + ?Sized>(
    kin: &K,
    p: &InterwovenMatrix,
    x_init: &[f64],
    t_max: f64,
    tol: &Tolerances,
) -> Result<Trajectory> {
    let system = CoupledSystem::new(kin, p)?;
    if x_init.len() != system.state_len() {
        return Err(SimulateError::DimensionMismatch {
            context: format!(
                "initial state has {} values, system needs {}",
                x_init.len(),
                system.state_len()
            ),
        });
    }

    let dim = x_init.len();
    let mut y = x_init.to_vec();
    let mut t = 0.0;
    // the controller's step; individual attempts may be truncated to land on
    // a checkpoint without disturbing it
    let mut h_next = tol.initial_step.min(tol.max_step);

    let mut times = vec![0.0];
    let mut states = vec![y.clone()];
    let mut recent_deltas: Vec<f64> = Vec::new();

    let mut k = vec![vec![0.0; dim]; 7];
    let mut y_stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    system.rhs(&y, &mut k[0]);

    let mut checkpoint = CHECKPOINT_SPACING;
    while t < t_max - 1e-12 {
        let target = checkpoint.min(t_max);
        let truncated = t + h_next > target;
        let h = if truncated { target - t } else { h_next };

        // stages 2..7 (k[0] holds f(t, y) via FSAL)
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = DP_A[s][j];
                    if a != 0.0 {
                        acc += a * kj[i];
                    }
                }
                y_stage[i] = y[i] + h * acc;
            }
            system.rhs(&y_stage, &mut k[s]);
        }
        // 5th-order solution is stage 7's argument
        for i in 0..dim {
            let mut acc = 0.0;
            for j in 0..6 {
                let a = DP_A[6][j];
                if a != 0.0 {
                    acc += a * k[j][i];
                }
            }
            y_new[i] = y[i] + h * acc;
        }

        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                if DP_ERR[j] != 0.0 {
                    e += DP_ERR[j] * kj[i];
                }
            }
            e *= h;
            let scale = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / scale) * (e / scale);
        }
        let err = (err_sq / dim as f64).sqrt();

        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            return Err(SimulateError::NonFinite { t });
        }

        if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6); // FSAL: k7 of the accepted step is k1 of the next
            if (t - target).abs() <= 1e-12 {
                // FSAL slot holds f at the new state already
                if (target - checkpoint).abs() <= 1e-12 {
                    let prev = states.last().expect("has initial state");
                    let delta = y
                        .iter()
                        .zip(prev)
                        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                    times.push(t);
                    states.push(y.clone());
                    recent_deltas.push(delta);
                    if recent_deltas.len() > CONVERGENCE_WINDOW {
                        recent_deltas.remove(0);
                    }
                    if recent_deltas.len() == CONVERGENCE_WINDOW
                        && recent_deltas.iter().all(|d| *d < CONVERGENCE_DELTA)
                    {
                        // k[0] holds f at the current state via FSAL
                        let stationary = k[0]
                            .iter()
                            .fold(0.0_f64, |m, v| m.max(v.abs()))
                            <= CONVERGENCE_RHS_TOL;
                        if stationary {
                            return Ok(Trajectory {
                                times,
                                states,
                                converged: true,
                                converged_at: Some(t),
                                seed: None,
                            });
                        }
                    }
                    checkpoint += CHECKPOINT_SPACING;
                }
            }
        }

        let factor = if err <= f64::MIN_POSITIVE {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if truncated && err <= 1.0 {
            // a shortened landing step says nothing about the controller's
            // natural step, so leave it alone
        } else {
            h_next = (h * factor).min(tol.max_step);
        }
        if h_next < MIN_STEP {
            return Err(SimulateError::StepSizeUnderflow { t, h: h_next });
        }
    }

    Ok(Trajectory {
        times,
        states,
        converged: false,
        converged_at: None,
        seed: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PatternKind {
    Homogeneous,
    Laminar,
    Other,
}

#[derive(Debug, Clone, Serialize)]
pub struct PatternClass {
    pub class: PatternKind,
    /// Mean of the reporting component per layer.
    pub layer_means: [f64; 2],
    /// Layer contrast over pooled within-layer deviation.
    pub separation: f64,
}

/// Classifies a converged full state by its reporting component:
/// homogeneous when every cell sits at the reference value, laminar when the
/// layers deviate with opposite signs, are internally uniform, and separate
/// by at least ten pooled within-layer deviations.
pub fn classify_pattern(
    final_state: &[f64],
    state_dim: usize,
    layer1_cells: usize,
    x0: &[f64],
    component: usize,
) -> PatternClass {
    let n_cells = final_state.len() / state_dim;
    let values: Vec<f64> = (0..n_cells)
        .map(|i| final_state[i * state_dim + component])
        .collect();
    let x_ref = x0[component];
    let (first, second) = values.split_at(layer1_cells);

    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len().max(1) as f64;
    let m1 = mean(first);
    let m2 = mean(second);
    let ss = |xs: &[f64], m: f64| xs.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    let std1 = (ss(first, m1) / first.len().max(1) as f64).sqrt();
    let std2 = (ss(second, m2) / second.len().max(1) as f64).sqrt();
    let pooled = ((ss(first, m1) + ss(second, m2)) / values.len() as f64).sqrt();
    let separation = if pooled > 0.0 {
        (m1 - m2).abs() / pooled
    } else if (m1 - m2).abs() > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };

    let homog_tol = 1e-3 * (1.0 + x_ref.abs());
    if values.iter().all(|v| (v - x_ref).abs() <= homog_tol) {
        return PatternClass {
            class: PatternKind::Homogeneous,
            layer_means: [m1, m2],
            separation,
        };
    }

    let d1 = m1 - x_ref;
    let d2 = m2 - x_ref;
    let opposite = d1 * d2 < 0.0;
    let uniform = std1 < 0.1 * d1.abs() && std2 < 0.1 * d2.abs();
    if opposite && uniform && separation >= 10.0 {
        return PatternClass {
            class: PatternKind::Laminar,
            layer_means: [m1, m2],
            separation,
        };
    }
    PatternClass {
        class: PatternKind::Other,
        layer_means: [m1, m2],
        separation,
    }
}

/// Trajectory export `(t, cell, x1..xn)`, one row per checkpoint and cell.
pub fn trajectory_csv(traj: &Trajectory, state_dim: usize) -> String {
    let mut out = String::from("t,cell");
    for c in 1..=state_dim {
        out.push_str(&format!(",x{c}"));
    }
    out.push('\n');
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let n_cells = state.len() / state_dim;
        for cell in 0..n_cells {
            out.push_str(&crate::fmt_sig12(*t));
            out.push_str(&format!(",{cell}"));
            for c in 0..state_dim {
                out.push(',');
                out.push_str(&crate::fmt_sig12(state[cell * state_dim + c]));
            }
            out.push('\n');
        }
    }
    out
}

/// Snapshot export `(cell, layer, x_component)` for rendering.
pub fn snapshot_csv(
    state: &[f64],
    state_dim: usize,
    layer1_cells: usize,
    component: usize,
) -> String {
    let n_cells = state.len() / state_dim;
    let mut out = String::from("cell,layer,value\n");
    for cell in 0..n_cells {
        let layer = if cell < layer1_cells { 1 } else { 2 };
        out.push_str(&format!(
            "{cell},{layer},{}\n",
            crate::fmt_sig12(state[cell * state_dim + component])
        ));
    }
    out
}

/// Parses [`trajectory_csv`] back into checkpoint times and full states.
pub fn parse_trajectory_csv(
    text: &str,
    state_dim: usize,
) -> std::result::Result<(Vec<f64>, Vec<Vec<f64>>), String> {
    let mut times: Vec<f64> = Vec::new();
    let mut states: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != state_dim + 2 {
            return Err(format!(
                "line {}: expected {} fields",
                lineno + 1,
                state_dim + 2
            ));
        }
        let err = |e: std::num::ParseFloatError| format!("line {}: {e}", lineno + 1);
        let t = parts[0].parse::<f64>().map_err(err)?;
        if times.last().map_or(true, |last| *last != t) {
            times.push(t);
            states.push(Vec::new());
        }
        let state = states.last_mut().expect("state row started");
        for part in &parts[2..] {
            state.push(part.parse::<f64>().map_err(err)?);
        }
    }
    Ok((times, states))
}

/// Parses [`snapshot_csv`] back into `(cell, layer, value)` rows.
pub fn parse_snapshot_csv(text: &str) -> std::result::Result<Vec<(usize, usize, f64)>, String> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(format!("line {}: expected 3 fields", lineno + 1));
        }
        let cell = parts[0]
            .parse::<usize>()
            .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        let layer = parts[1]
            .parse::<usize>()
            .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        let value = parts[2]
            .parse::<f64>()
            .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        rows.push((cell, layer, value));
    }
    Ok(rows)
}

//! Intracellular input-output kinetics: the generic interface, the
//! lateral-inhibition-with-diffusive-crosstalk example it ships with, the
//! homogeneous steady state solver, and linearization to `(A, B, C)` and the
//! transfer derivative `DT = -C A^{-1} B`.

use crate::numerics::{DenseMatrix, LuFactors, NumericsError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KineticsError {
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
    #[error("steady-state iteration did not converge: residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("state Jacobian A is singular at the evaluation point")]
    SingularA,
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, KineticsError>;

/// Per-cell input-output dynamics: `dx/dt = f(x, u)`, `y = h(x)` with `n`
/// intracellular states and `r` input/output signals.
pub trait Kinetics: Sync {
    fn state_dim(&self) -> usize;
    fn signal_dim(&self) -> usize;
    fn derivative(&self, x: &[f64], u: &[f64], dx: &mut [f64]);
    fn output(&self, x: &[f64], y: &mut [f64]);

    /// Analytic `(A, B, C)` when available; the default falls back to central
    /// finite differences.
    fn analytic_jacobians(&self, _x: &[f64], _u: &[f64]) -> Option<Jacobians> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct Jacobians {
    /// df/dx, n x n
    pub a: DenseMatrix,
    /// df/du, n x r
    pub b: DenseMatrix,
    /// dh/dx, r x n
    pub c: DenseMatrix,
}

/// Hill coefficients for the increasing (`f_j`) and decreasing (`g_j`)
/// response functions of the shipped example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HillParameters {
    /// alpha_j of f_j(x) = x^k_j / (alpha_j + x^k_j)
    pub alpha: [f64; 2],
    /// beta_j of g_j(x) = 1 / (1 + beta_j x^h_j)
    pub beta: [f64; 3],
    /// Hill exponents of f_j
    pub k: [f64; 2],
    /// Hill exponents of g_j
    pub h: [f64; 3],
}

impl Default for HillParameters {
    fn default() -> Self {
        Self {
            alpha: [0.01, 1.0],
            beta: [100.0, 100.0, 100.0],
            k: [2.0, 2.0],
            h: [2.0, 2.0, 1.0],
        }
    }
}

impl HillParameters {
    pub fn validate(&self) -> Result<()> {
        let all = self
            .alpha
            .iter()
            .chain(&self.beta)
            .chain(&self.k)
            .chain(&self.h);
        for &v in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(KineticsError::NonFinite {
                    context: format!("Hill parameter {v}"),
                });
            }
        }
        Ok(())
    }

    /// f_j, increasing, f_j(0) = 0, f_j -> 1. `j` is 0-based.
    pub fn f(&self, j: usize, x: f64) -> f64 {
        let x = x.max(0.0);
        let xk = x.powf(self.k[j]);
        xk / (self.alpha[j] + xk)
    }

    pub fn df(&self, j: usize, x: f64) -> f64 {
        let x = x.max(0.0);
        let xk = x.powf(self.k[j]);
        let denom = self.alpha[j] + xk;
        self.k[j] * self.alpha[j] * x.powf(self.k[j] - 1.0) / (denom * denom)
    }

    /// g_j, decreasing, g_j(0) = 1, g_j -> 0.
    pub fn g(&self, j: usize, x: f64) -> f64 {
        let x = x.max(0.0);
        1.0 / (1.0 + self.beta[j] * x.powf(self.h[j]))
    }

    pub fn dg(&self, j: usize, x: f64) -> f64 {
        let x = x.max(0.0);
        let denom = 1.0 + self.beta[j] * x.powf(self.h[j]);
        -self.beta[j] * self.h[j] * x.powf(self.h[j] - 1.0) / (denom * denom)
    }
}

/// The worked double-input double-output system: a lateral-inhibition loop
/// with a diffusive crosstalk channel.
///
/// ```text
/// dx1 = g1(u1) g2(x2) f1(u2) - x1
/// dx2 = f2(x1) - x2
/// dx3 = g3(x1) - x3
/// y   = (x2, x3)
/// ```
#[derive(Debug, Clone, Default)]
pub struct HillCrosstalk {
    pub params: HillParameters,
}

impl HillCrosstalk {
    pub fn new(params: HillParameters) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl Kinetics for HillCrosstalk {
    fn state_dim(&self) -> usize {
        3
    }

    fn signal_dim(&self) -> usize {
        2
    }

    fn derivative(&self, x: &[f64], u: &[f64], dx: &mut [f64]) {
        let p = &self.params;
        dx[0] = p.g(0, u[0]) * p.g(1, x[1]) * p.f(0, u[1]) - x[0];
        dx[1] = p.f(1, x[0]) - x[1];
        dx[2] = p.g(2, x[0]) - x[2];
    }

    fn output(&self, x: &[f64], y: &mut [f64]) {
        y[0] = x[1];
        y[1] = x[2];
    }

    fn analytic_jacobians(&self, x: &[f64], u: &[f64]) -> Option<Jacobians> {
        let p = &self.params;
        let g1 = p.g(0, u[0]);
        let f1 = p.f(0, u[1]);
        let g2 = p.g(1, x[1]);
        let a = DenseMatrix::from_nested(&[
            vec![-1.0, g1 * f1 * p.dg(1, x[1]), 0.0],
            vec![p.df(1, x[0]), -1.0, 0.0],
            vec![p.dg(2, x[0]), 0.0, -1.0],
        ])
        .ok()?;
        let b = DenseMatrix::from_nested(&[
            vec![p.dg(0, u[0]) * g2 * f1, g1 * g2 * p.df(0, u[1])],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
        ])
        .ok()?;
        let c = DenseMatrix::from_nested(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).ok()?;
        Some(Jacobians { a, b, c })
    }
}

/// Evaluates `f(x, u)` with finiteness checks on the way in and out.
pub fn evaluate_rhs<K: Kinetics + ?Sized>(kin: &K, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    if x.len() != kin.state_dim() || u.len() != kin.signal_dim() {
        return Err(KineticsError::DimensionMismatch {
            context: format!("state {} / input {}", x.len(), u.len()),
        });
    }
    if x.iter().chain(u).any(|v| !v.is_finite()) {
        return Err(KineticsError::NonFinite {
            context: "rhs input".to_string(),
        });
    }
    let mut dx = vec![0.0; kin.state_dim()];
    kin.derivative(x, u, &mut dx);
    if dx.iter().any(|v| !v.is_finite()) {
        return Err(KineticsError::NonFinite {
            context: "rhs output".to_string(),
        });
    }
    Ok(dx)
}

pub fn evaluate_output<K: Kinetics + ?Sized>(kin: &K, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; kin.signal_dim()];
    kin.output(x, &mut y);
    y
}

/// Central-difference `(A, B, C)` with step `1e-6 * (1 + |value|)` per
/// component.
pub fn finite_difference_jacobians<K: Kinetics + ?Sized>(
    kin: &K,
    x: &[f64],
    u: &[f64],
) -> Result<Jacobians> {
    let n = kin.state_dim();
    let r = kin.signal_dim();
    let mut a = DenseMatrix::zeros(n, n);
    let mut b = DenseMatrix::zeros(n, r);
    let mut c = DenseMatrix::zeros(r, n);

    let mut xp = x.to_vec();
    let mut dx_hi = vec![0.0; n];
    let mut dx_lo = vec![0.0; n];
    for j in 0..n {
        let step = 1e-6 * (1.0 + x[j].abs());
        xp[j] = x[j] + step;
        kin.derivative(&xp, u, &mut dx_hi);
        xp[j] = x[j] - step;
        kin.derivative(&xp, u, &mut dx_lo);
        xp[j] = x[j];
        for i in 0..n {
            a.set(i, j, (dx_hi[i] - dx_lo[i]) / (2.0 * step));
        }
    }
    let mut up = u.to_vec();
    for j in 0..r {
        let step = 1e-6 * (1.0 + u[j].abs());
        up[j] = u[j] + step;
        kin.derivative(x, &up, &mut dx_hi);
        up[j] = u[j] - step;
        kin.derivative(x, &up, &mut dx_lo);
        up[j] = u[j];
        for i in 0..n {
            b.set(i, j, (dx_hi[i] - dx_lo[i]) / (2.0 * step));
        }
    }
    let mut y_hi = vec![0.0; r];
    let mut y_lo = vec![0.0; r];
    for j in 0..n {
        let step = 1e-6 * (1.0 + x[j].abs());
        xp[j] = x[j] + step;
        kin.output(&xp, &mut y_hi);
        xp[j] = x[j] - step;
        kin.output(&xp, &mut y_lo);
        xp[j] = x[j];
        for i in 0..r {
            c.set(i, j, (y_hi[i] - y_lo[i]) / (2.0 * step));
        }
    }
    for m in [&a, &b, &c] {
        if m.entries().iter().any(|v| !v.is_finite()) {
            return Err(KineticsError::NonFinite {
                context: "finite-difference Jacobian".to_string(),
            });
        }
    }
    Ok(Jacobians { a, b, c })
}

fn jacobians_at<K: Kinetics + ?Sized>(kin: &K, x: &[f64], u: &[f64]) -> Result<Jacobians> {
    match kin.analytic_jacobians(x, u) {
        Some(j) => Ok(j),
        None => finite_difference_jacobians(kin, x, u),
    }
}

/// Solves `f(x, u) = 0` for fixed `u` by damped Newton iteration.
pub fn steady_state_for_input<K: Kinetics + ?Sized>(
    kin: &K,
    u: &[f64],
    x_guess: &[f64],
) -> Result<Vec<f64>> {
    let n = kin.state_dim();
    let mut x = x_guess.to_vec();
    let mut fx = vec![0.0; n];
    for iter in 0..200 {
        kin.derivative(&x, u, &mut fx);
        let residual = fx.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !residual.is_finite() {
            return Err(KineticsError::NonFinite {
                context: "inner steady-state iteration".to_string(),
            });
        }
        if residual <= 1e-13 {
            return Ok(x);
        }
        let jac = jacobians_at(kin, &x, u)?;
        let factors = LuFactors::factor(&jac.a).map_err(|e| match e {
            NumericsError::Singular { .. } => KineticsError::SingularA,
            other => KineticsError::Numerics(other),
        })?;
        let neg_fx: Vec<f64> = fx.iter().map(|v| -v).collect();
        let step = factors.solve(&neg_fx);
        // backtrack if the full step overshoots
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let candidate: Vec<f64> = x
                .iter()
                .zip(&step)
                .map(|(xi, si)| xi + scale * si)
                .collect();
            kin.derivative(&candidate, u, &mut fx);
            let new_res = fx.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if new_res.is_finite() && (new_res < residual || new_res <= 1e-13) {
                x = candidate;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(KineticsError::NoConvergence {
                residual,
                iterations: iter,
            });
        }
    }
    let residual = fx.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Err(KineticsError::NoConvergence {
        residual,
        iterations: 200,
    })
}

/// The transfer map `T(u) = h(S(u))` where `S(u)` solves `f(x, u) = 0`.
pub fn transfer<K: Kinetics + ?Sized>(kin: &K, u: &[f64], x_guess: &[f64]) -> Result<Vec<f64>> {
    let x = steady_state_for_input(kin, u, x_guess)?;
    Ok(evaluate_output(kin, &x))
}

/// Homogeneous steady state: `f(x0, u0) = 0` with `u0 = h(x0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hss {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

/// Two-stage solve: a damped fixed-point sweep on `u -> T(u)` (damping 0.5,
/// 500 iterations) followed by Newton on the closed system `f(x, h(x)) = 0`
/// to a residual of 1e-12. Row-stochastic coupling makes the homogeneous
/// input equal the homogeneous output, so no interconnection matrix appears.
pub fn solve_hss<K: Kinetics + ?Sized>(kin: &K) -> Result<Hss> {
    let n = kin.state_dim();
    let r = kin.signal_dim();

    // stage 1: damped fixed point on the transfer map
    let mut u = vec![0.0; r];
    let mut x = steady_state_for_input(kin, &u, &vec![0.0; n])?;
    for _ in 0..500 {
        let t = transfer(kin, &u, &x)?;
        let mut delta = 0.0_f64;
        for i in 0..r {
            let next = 0.5 * u[i] + 0.5 * t[i];
            delta = delta.max((next - u[i]).abs());
            u[i] = next;
        }
        x = steady_state_for_input(kin, &u, &x)?;
        if delta <= 1e-14 {
            break;
        }
    }

    // stage 2: Newton on the closed system, Jacobian A + B C
    let mut fx = vec![0.0; n];
    for iter in 0..100 {
        let y = evaluate_output(kin, &x);
        kin.derivative(&x, &y, &mut fx);
        let residual = fx.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if residual <= 1e-12 {
            return Ok(Hss { x, u: y });
        }
        let jac = jacobians_at(kin, &x, &y)?;
        let closed = jac.a.add(&jac.b.matmul(&jac.c));
        let factors = LuFactors::factor(&closed).map_err(|e| match e {
            NumericsError::Singular { .. } => KineticsError::SingularA,
            other => KineticsError::Numerics(other),
        })?;
        let neg_fx: Vec<f64> = fx.iter().map(|v| -v).collect();
        let step = factors.solve(&neg_fx);
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi += si;
        }
        if step.iter().all(|s| s.abs() <= 1e-15) && residual > 1e-12 {
            return Err(KineticsError::NoConvergence {
                residual,
                iterations: iter,
            });
        }
    }
    let residual = fx.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Err(KineticsError::NoConvergence {
        residual,
        iterations: 100,
    })
}

/// Linearization of the IO kinetics at a steady state.
#[derive(Debug, Clone)]
pub struct Linearization {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub c: DenseMatrix,
    /// Transfer derivative `-C A^{-1} B`, r x r.
    pub dt: DenseMatrix,
    pub det_a: f64,
    pub x0: Vec<f64>,
    pub u0: Vec<f64>,
}

/// Builds `(A, B, C)` at `(x0, u0)` (analytic when the kinetics provide it)
/// and the transfer derivative `DT = -C A^{-1} B`.
pub fn linearize<K: Kinetics + ?Sized>(kin: &K, x0: &[f64], u0: &[f64]) -> Result<Linearization> {
    let jac = jacobians_at(kin, x0, u0)?;
    let n = kin.state_dim();
    let r = kin.signal_dim();
    let factors = LuFactors::factor(&jac.a).map_err(|e| match e {
        NumericsError::Singular { .. } => KineticsError::SingularA,
        other => KineticsError::Numerics(other),
    })?;
    let det_a = factors.determinant();
    // X = A^{-1} B, column by column
    let mut x_cols = DenseMatrix::zeros(n, r);
    for j in 0..r {
        let col: Vec<f64> = (0..n).map(|i| jac.b.get(i, j)).collect();
        let sol = factors.solve(&col);
        for i in 0..n {
            x_cols.set(i, j, sol[i]);
        }
    }
    let dt = jac.c.matmul(&x_cols).scale(-1.0);
    Ok(Linearization {
        a: jac.a,
        b: jac.b,
        c: jac.c,
        dt,
        det_a,
        x0: x0.to_vec(),
        u0: u0.to_vec(),
    })
}

/// Transfer derivative at an arbitrary admissible input, evaluated at the
/// input-driven steady state `S(u)`.
pub fn transfer_derivative_at<K: Kinetics + ?Sized>(
    kin: &K,
    u: &[f64],
    x_guess: &[f64],
) -> Result<DenseMatrix> {
    let x = steady_state_for_input(kin, u, x_guess)?;
    Ok(linearize(kin, &x, u)?.dt)
}

/// Sign structure classes of the transfer derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignClass {
    /// Checkerboard: negative on the diagonal pattern, positive off it.
    S1,
    /// Entrywise non-positive.
    S2,
    Neither,
}

/// Entries below this magnitude count as zero in sign classification.
pub const SIGN_ZERO_TOL: f64 = 1e-12;

/// Classifies a transfer derivative into the admissible competitive sign
/// structures. Zeros are allowed in either class provided the matrix stays
/// irreducible.
pub fn classify_sign_structure(dt: &DenseMatrix) -> SignClass {
    let r = dt.rows();
    if r != dt.cols() {
        return SignClass::Neither;
    }
    let mut pattern = DenseMatrix::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            if dt.get(i, j).abs() >= SIGN_ZERO_TOL {
                pattern.set(i, j, 1.0);
            }
        }
    }
    let irreducible = crate::interwoven::is_irreducible(&pattern).unwrap_or(false);
    if !irreducible {
        return SignClass::Neither;
    }
    let mut s1 = true;
    let mut s2 = true;
    for i in 0..r {
        for j in 0..r {
            let v = dt.get(i, j);
            if v.abs() < SIGN_ZERO_TOL {
                continue;
            }
            // checkerboard: negative when i+j is even, positive when odd
            let s1_sign = if (i + j) % 2 == 0 { -1.0 } else { 1.0 };
            if v.signum() != s1_sign {
                s1 = false;
            }
            if v > 0.0 {
                s2 = false;
            }
        }
    }
    if s1 {
        SignClass::S1
    } else if s2 {
        SignClass::S2
    } else {
        SignClass::Neither
    }
}

/// Sign class of a linearization's transfer derivative.
pub fn classify_transfer_signs(lin: &Linearization) -> SignClass {
    classify_sign_structure(&lin.dt)
}

/// Reflects an S1-signed matrix to S2 form via `M DT M` with
/// `M = diag(-1, 1, -1, ...)`; S2 input passes through unchanged.
pub fn reflect_to_s2(dt: &DenseMatrix) -> Option<DenseMatrix> {
    match classify_sign_structure(dt) {
        SignClass::S2 => Some(dt.clone()),
        SignClass::S1 => {
            let r = dt.rows();
            let mut out = DenseMatrix::zeros(r, r);
            for i in 0..r {
                for j in 0..r {
                    let mi = if i % 2 == 0 { -1.0 } else { 1.0 };
                    let mj = if j % 2 == 0 { -1.0 } else { 1.0 };
                    out.set(i, j, mi * mj * dt.get(i, j));
                }
            }
            Some(out)
        }
        SignClass::Neither => None,
    }
}

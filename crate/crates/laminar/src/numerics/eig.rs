use num_complex::Complex64;

use super::dense::DenseMatrix;
use super::{NumericsError, Result};

/// Relative asymmetry tolerance for the symmetric eigensolver path.
const SYMMETRY_TOL: f64 = 1e-12;
/// Jacobi sweep cap.
const JACOBI_MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius threshold (relative) for Jacobi convergence.
const JACOBI_OFF_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues; sorted ascending by (re, im).
    pub values: Vec<Complex64>,
    /// Orthonormal eigenvectors, column-wise (symmetric path only).
    pub vectors: Option<DenseMatrix>,
    pub is_symmetric_path: bool,
}

impl EigenDecomposition {
    /// Real parts when every imaginary part is negligible.
    pub fn real_values(&self) -> Option<Vec<f64>> {
        let scale = self
            .values
            .iter()
            .fold(1.0_f64, |m, v| m.max(v.norm()));
        if self.values.iter().all(|v| v.im.abs() <= 1e-9 * scale) {
            Some(self.values.iter().map(|v| v.re).collect())
        } else {
            None
        }
    }

    pub fn max_real_part(&self) -> f64 {
        self.values
            .iter()
            .fold(f64::NEG_INFINITY, |m, v| m.max(v.re))
    }
}

pub(crate) fn sort_complex(values: &mut [Complex64]) {
    values.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues come back real and ascending, eigenvectors orthonormal in the
/// matching column order.
pub fn eig_symmetric(m: &DenseMatrix) -> Result<EigenDecomposition> {
    let n = m.require_square()?;
    let scale = m.max_abs().max(1e-300);
    for i in 0..n {
        for j in (i + 1)..n {
            let dev = (m.get(i, j) - m.get(j, i)).abs();
            if dev > SYMMETRY_TOL * scale {
                return Err(NumericsError::NotSymmetric { i, j, deviation: dev });
            }
        }
    }

    let mut a = m.clone();
    // enforce exact symmetry so rotations stay consistent
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, avg);
            a.set(j, i, avg);
        }
    }
    let mut v = DenseMatrix::identity(n);
    let fro = a.frobenius_norm().max(1e-300);

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a.get(i, j) * a.get(i, j);
            }
        }
        if off.sqrt() <= JACOBI_OFF_TOL * fro {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e12 {
                    1.0 / (2.0 * theta)
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for k in 0..n {
                    if k != p && k != q {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(p, k, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                        a.set(q, k, s * akp + c * akq);
                    }
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    if !converged {
        // final check after the last sweep
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a.get(i, j) * a.get(i, j);
            }
        }
        if off.sqrt() > JACOBI_OFF_TOL * fro {
            return Err(NumericsError::NoConvergence {
                iterations: JACOBI_MAX_SWEEPS,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).partial_cmp(&a.get(j, j)).unwrap());
    let values: Vec<Complex64> = order
        .iter()
        .map(|&i| Complex64::new(a.get(i, i), 0.0))
        .collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, v.get(row, src));
        }
    }
    Ok(EigenDecomposition {
        values,
        vectors: Some(vectors),
        is_symmetric_path: true,
    })
}

/// Eigenvalues of a general real matrix via Hessenberg reduction followed by
/// implicitly shifted QR with 2x2 deflation. Intended for the small
/// nonsymmetric blocks this library produces (kinetics Jacobians, mode
/// matrices); no eigenvectors are accumulated.
pub fn eig_general(m: &DenseMatrix) -> Result<EigenDecomposition> {
    let n = m.require_square()?;
    if n == 0 {
        return Ok(EigenDecomposition {
            values: vec![],
            vectors: None,
            is_symmetric_path: false,
        });
    }
    let mut h = m.clone();
    hessenberg_in_place(&mut h);
    let mut values = hqr_eigenvalues(&mut h)?;
    sort_complex(&mut values);
    Ok(EigenDecomposition {
        values,
        vectors: None,
        is_symmetric_path: false,
    })
}

/// Householder reduction to upper Hessenberg form, in place.
fn hessenberg_in_place(h: &mut DenseMatrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let mut ort = vec![0.0; n];
    for m in 1..(n - 1) {
        let mut scale = 0.0;
        for i in m..n {
            scale += h.get(i, m - 1).abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut hsum = 0.0;
        for i in (m..n).rev() {
            ort[i] = h.get(i, m - 1) / scale;
            hsum += ort[i] * ort[i];
        }
        let mut g = hsum.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hsum -= ort[m] * g;
        ort[m] -= g;

        // apply Householder similarity transform H = (I - u u' / h) H (I - u u' / h)
        for j in m..n {
            let mut f = 0.0;
            for i in (m..n).rev() {
                f += ort[i] * h.get(i, j);
            }
            f /= hsum;
            for i in m..n {
                h.set(i, j, h.get(i, j) - f * ort[i]);
            }
        }
        for i in 0..n {
            let mut f = 0.0;
            for j in (m..n).rev() {
                f += ort[j] * h.get(i, j);
            }
            f /= hsum;
            for j in m..n {
                h.set(i, j, h.get(i, j) - f * ort[j]);
            }
        }
        h.set(m, m - 1, scale * g);
        for i in (m + 1)..n {
            h.set(i, m - 1, 0.0);
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix; eigenvalues only.
fn hqr_eigenvalues(h: &mut DenseMatrix) -> Result<Vec<Complex64>> {
    let nn = h.rows();
    let mut values = vec![Complex64::new(0.0, 0.0); nn];
    let low = 0usize;
    let eps = f64::EPSILON;
    let max_total = 30 * nn.max(1);
    let mut total_iter = 0usize;

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h.get(i, j).abs();
        }
    }
    if norm == 0.0 {
        return Ok(values);
    }

    let mut n = nn as isize - 1;
    let mut exshift = 0.0;
    let mut iter = 0usize;

    while n >= low as isize {
        let nu = n as usize;
        // look for a single small subdiagonal element
        let mut l = nu;
        while l > low {
            let mut s = h.get(l - 1, l - 1).abs() + h.get(l, l).abs();
            if s == 0.0 {
                s = norm;
            }
            if h.get(l, l - 1).abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            // one root found
            let v = h.get(nu, nu) + exshift;
            h.set(nu, nu, v);
            values[nu] = Complex64::new(v, 0.0);
            n -= 1;
            iter = 0;
        } else if l == nu - 1 {
            // two roots found
            let w = h.get(nu, nu - 1) * h.get(nu - 1, nu);
            let p = (h.get(nu - 1, nu - 1) - h.get(nu, nu)) / 2.0;
            let q = p * p + w;
            let z = q.abs().sqrt();
            let x = h.get(nu, nu) + exshift;
            h.set(nu, nu, x);
            h.set(nu - 1, nu - 1, h.get(nu - 1, nu - 1) + exshift);
            if q >= 0.0 {
                let z = if p >= 0.0 { p + z } else { p - z };
                let first = x + z;
                let second = if z != 0.0 { x - w / z } else { first };
                values[nu - 1] = Complex64::new(first, 0.0);
                values[nu] = Complex64::new(second, 0.0);
            } else {
                values[nu - 1] = Complex64::new(x + p, z);
                values[nu] = Complex64::new(x + p, -z);
            }
            n -= 2;
            iter = 0;
        } else {
            // form shift
            let mut x = h.get(nu, nu);
            let mut y = h.get(nu - 1, nu - 1);
            let mut w = h.get(nu, nu - 1) * h.get(nu - 1, nu);

            if iter == 10 || iter == 20 {
                // exceptional shift
                exshift += x;
                for i in low..=nu {
                    h.set(i, i, h.get(i, i) - x);
                }
                let s = h.get(nu, nu - 1).abs() + h.get(nu - 1, nu - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            iter += 1;
            total_iter += 1;
            if iter > 30 || total_iter > max_total {
                return Err(NumericsError::NoConvergence {
                    iterations: total_iter,
                });
            }

            // look for two consecutive small subdiagonal elements
            let mut m = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = h.get(m, m);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h.get(m + 1, m) + h.get(m, m + 1);
                q = h.get(m + 1, m + 1) - z - rr - ss;
                r = h.get(m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h.get(m, m - 1).abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (h.get(m - 1, m - 1).abs()
                                + z.abs()
                                + h.get(m + 1, m + 1).abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nu {
                h.set(i, i - 2, 0.0);
                if i > m + 2 {
                    h.set(i, i - 3, 0.0);
                }
            }

            // double QR step on rows l..n and columns m..n
            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h.get(k, k - 1);
                    q = h.get(k + 1, k - 1);
                    r = if notlast { h.get(k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    h.set(k, k - 1, -s * x);
                } else if l != m {
                    h.set(k, k - 1, -h.get(k, k - 1));
                }
                p += s;
                let px = p / s;
                let py = q / s;
                let pz = r / s;
                q /= p;
                r /= p;

                // row modification
                for j in k..=nu {
                    let mut f = h.get(k, j) + q * h.get(k + 1, j);
                    if notlast {
                        f += r * h.get(k + 2, j);
                    }
                    h.set(k, j, h.get(k, j) - f * px);
                    h.set(k + 1, j, h.get(k + 1, j) - f * py);
                    if notlast {
                        h.set(k + 2, j, h.get(k + 2, j) - f * pz);
                    }
                }
                // column modification
                for i in l..=nu.min(k + 3) {
                    let mut f = px * h.get(i, k) + py * h.get(i, k + 1);
                    if notlast {
                        f += pz * h.get(i, k + 2);
                    }
                    h.set(i, k, h.get(i, k) - f);
                    h.set(i, k + 1, h.get(i, k + 1) - f * q);
                    if notlast {
                        h.set(i, k + 2, h.get(i, k + 2) - f * r);
                    }
                }
            }
        }
    }
    Ok(values)
}

use super::dense::DenseMatrix;
use super::{NumericsError, Result, SINGULAR_PIVOT_TOL};

/// LU factorization with partial pivoting, stored packed.
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
    sign: f64,
}

impl LuFactors {
    pub fn factor(m: &DenseMatrix) -> Result<Self> {
        let n = m.require_square()?;
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let scale = m.max_abs().max(1.0);

        for k in 0..n {
            let mut pivot_row = k;
            let mut pivot_mag = lu.get(k, k).abs();
            for i in (k + 1)..n {
                let mag = lu.get(i, k).abs();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = i;
                }
            }
            if pivot_mag <= SINGULAR_PIVOT_TOL * scale {
                return Err(NumericsError::Singular {
                    step: k,
                    pivot: pivot_mag,
                });
            }
            if pivot_row != k {
                for j in 0..n {
                    let a = lu.get(k, j);
                    let b = lu.get(pivot_row, j);
                    lu.set(k, j, b);
                    lu.set(pivot_row, j, a);
                }
                perm.swap(k, pivot_row);
                sign = -sign;
            }
            let pivot = lu.get(k, k);
            for i in (k + 1)..n {
                let factor = lu.get(i, k) / pivot;
                lu.set(i, k, factor);
                if factor != 0.0 {
                    for j in (k + 1)..n {
                        lu.set(i, j, lu.get(i, j) - factor * lu.get(k, j));
                    }
                }
            }
        }
        Ok(Self { lu, perm, sign })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        assert_eq!(rhs.len(), n, "rhs length mismatch");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        // forward substitution (unit lower triangle)
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu.get(i, j) * x[j];
            }
            x[i] = acc;
        }
        // back substitution
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu.get(i, j) * x[j];
            }
            x[i] = acc / self.lu.get(i, i);
        }
        x
    }

    pub fn determinant(&self) -> f64 {
        let n = self.lu.rows();
        (0..n).fold(self.sign, |acc, i| acc * self.lu.get(i, i))
    }
}

/// Solves `m * x = rhs` with partially pivoted LU.
pub fn solve_linear(m: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = m.require_square()?;
    if rhs.len() != n {
        return Err(NumericsError::DimensionMismatch {
            context: format!("rhs length {} for {n}x{n} system", rhs.len()),
        });
    }
    Ok(LuFactors::factor(m)?.solve(rhs))
}

pub fn determinant(m: &DenseMatrix) -> Result<f64> {
    let n = m.require_square()?;
    if n == 0 {
        return Ok(1.0);
    }
    match LuFactors::factor(m) {
        Ok(f) => Ok(f.determinant()),
        // An exactly-singular factorization still has a well-defined determinant.
        Err(NumericsError::Singular { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

pub fn invert(m: &DenseMatrix) -> Result<DenseMatrix> {
    let n = m.require_square()?;
    let factors = LuFactors::factor(m)?;
    let mut out = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = factors.solve(&e);
        e[j] = 0.0;
        for i in 0..n {
            out.set(i, j, col[i]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve_returns_rhs() {
        let m = DenseMatrix::identity(3);
        let b = vec![1.0, -2.0, 3.5];
        assert_eq!(solve_linear(&m, &b).unwrap(), b);
    }

    #[test]
    fn diagonal_solve() {
        let m = DenseMatrix::from_nested(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let x = solve_linear(&m, &[2.0, 8.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = DenseMatrix::from_nested(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            solve_linear(&m, &[1.0, 1.0]),
            Err(NumericsError::Singular { .. })
        ));
    }

    #[test]
    fn residual_oracle_on_well_conditioned_system() {
        // fixed 5x5 with dominant diagonal; multiply-back residual check
        let mut m = DenseMatrix::zeros(5, 5);
        let mut seed = 0x9e3779b97f4a7c15_u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        for i in 0..5 {
            for j in 0..5 {
                m.set(i, j, next() + if i == j { 4.0 } else { 0.0 });
            }
        }
        let rhs: Vec<f64> = (0..5).map(|_| next()).collect();
        let x = solve_linear(&m, &rhs).unwrap();
        let prod = m.matvec(&x);
        let x_max = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let rhs_max = rhs.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let bound = 1e-9 * (m.max_abs() * x_max + rhs_max);
        for (p, r) in prod.iter().zip(&rhs) {
            assert!((p - r).abs() <= bound, "residual {} above {}", (p - r).abs(), bound);
        }
    }

    #[test]
    fn determinant_of_singular_is_zero() {
        let m = DenseMatrix::from_nested(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(determinant(&m).unwrap(), 0.0);
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m = DenseMatrix::from_nested(&[
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, -1.0],
            vec![0.0, -1.0, 5.0],
        ])
        .unwrap();
        let inv = invert(&m).unwrap();
        let prod = m.matmul(&inv);
        let id = DenseMatrix::identity(3);
        assert!(prod.sub(&id).max_abs() < 1e-12);
    }
}

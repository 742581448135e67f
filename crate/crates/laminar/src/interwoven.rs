//! The global interconnection matrix `P = sum_i M_i (x) D_i`, stored by its
//! constructor list with the dense realization kept as a lazily built oracle.
//!
//! Global index convention: slot `cell * r + signal`, matching the cell-major
//! stacking of per-cell input/output vectors.

use crate::numerics::{
    self, eig_general, eig_symmetric, DenseMatrix, EigenDecomposition, NumericsError,
};
use num_complex::Complex64;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterwovenError {
    #[error("constructor {index} is {rows}x{cols}, expected square of dimension {expected}")]
    BadConstructor {
        index: usize,
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("empty constructor list")]
    Empty,
    #[error("constructor {index} is singular")]
    SingularBlock { index: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, InterwovenError>;

#[derive(Debug)]
pub struct InterwovenMatrix {
    signals: usize,
    cells: usize,
    constructors: Vec<DenseMatrix>,
    dense: OnceLock<DenseMatrix>,
}

impl Clone for InterwovenMatrix {
    fn clone(&self) -> Self {
        Self {
            signals: self.signals,
            cells: self.cells,
            constructors: self.constructors.clone(),
            dense: OnceLock::new(),
        }
    }
}

/// Interweaves one square constructor per signal mechanism.
pub fn interweave(constructors: Vec<DenseMatrix>) -> Result<InterwovenMatrix> {
    if constructors.is_empty() {
        return Err(InterwovenError::Empty);
    }
    let n = constructors[0].rows();
    for (index, m) in constructors.iter().enumerate() {
        if m.rows() != n || m.cols() != n {
            return Err(InterwovenError::BadConstructor {
                index,
                rows: m.rows(),
                cols: m.cols(),
                expected: n,
            });
        }
    }
    Ok(InterwovenMatrix {
        signals: constructors.len(),
        cells: n,
        constructors,
        dense: OnceLock::new(),
    })
}

impl InterwovenMatrix {
    pub fn signals(&self) -> usize {
        self.signals
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dim(&self) -> usize {
        self.signals * self.cells
    }

    pub fn constructors(&self) -> &[DenseMatrix] {
        &self.constructors
    }

    /// Dense realization; built on first use and cached.
    pub fn dense(&self) -> &DenseMatrix {
        self.dense.get_or_init(|| {
            let r = self.signals;
            let dim = self.dim();
            let mut out = DenseMatrix::zeros(dim, dim);
            for (k, m) in self.constructors.iter().enumerate() {
                for i in 0..self.cells {
                    for j in 0..self.cells {
                        let v = m.get(i, j);
                        if v != 0.0 {
                            out.set(i * r + k, j * r + k, v);
                        }
                    }
                }
            }
            out
        })
    }

    /// Applies `P` to a cell-major stacked vector without realizing the dense
    /// form: `out[cell i, slot k] = sum_j (M_k)_{ij} y[cell j, slot k]`.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.dim(), "vector length mismatch");
        let r = self.signals;
        let mut out = vec![0.0; y.len()];
        for (k, m) in self.constructors.iter().enumerate() {
            for i in 0..self.cells {
                let mut acc = 0.0;
                for j in 0..self.cells {
                    let w = m.get(i, j);
                    if w != 0.0 {
                        acc += w * y[j * r + k];
                    }
                }
                out[i * r + k] = acc;
            }
        }
        out
    }

    /// Index map `tau` sending global slot `x` to `(x mod r) * N + floor(x / r)`,
    /// the permutation under which `Q^T P Q` is block diagonal in the
    /// constructors.
    pub fn block_permutation(&self) -> Vec<usize> {
        let r = self.signals;
        let n = self.cells;
        (0..self.dim()).map(|x| (x % r) * n + x / r).collect()
    }

    /// Blocks of `Q^T P Q`, read back from the dense realization. Round-trips
    /// the constructors exactly.
    pub fn block_diagonalize(&self) -> (Vec<usize>, Vec<DenseMatrix>) {
        let perm = self.block_permutation();
        let permuted = self.dense().permute_symmetric(&perm);
        let n = self.cells;
        let blocks = (0..self.signals)
            .map(|k| {
                let mut b = DenseMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        b.set(i, j, permuted.get(k * n + i, k * n + j));
                    }
                }
                b
            })
            .collect();
        (perm, blocks)
    }

    /// Spectrum as the union of the constructor spectra, multiplicities
    /// included; computed per block, never on the dense matrix.
    pub fn spectrum(&self) -> Result<EigenDecomposition> {
        let mut values: Vec<Complex64> = Vec::with_capacity(self.dim());
        for m in &self.constructors {
            let eig = if m.is_symmetric(1e-12) {
                eig_symmetric(m)?
            } else {
                eig_general(m)?
            };
            values.extend(eig.values);
        }
        crate::numerics::sort_complex_values(&mut values);
        Ok(EigenDecomposition {
            values,
            vectors: None,
            is_symmetric_path: false,
        })
    }

    /// Blockwise inverse: the interweave of the constructor inverses.
    pub fn inverse(&self) -> Result<InterwovenMatrix> {
        let mut inverses = Vec::with_capacity(self.signals);
        for (index, m) in self.constructors.iter().enumerate() {
            let inv = numerics::invert(m).map_err(|e| match e {
                NumericsError::Singular { .. } => InterwovenError::SingularBlock { index },
                other => InterwovenError::Numerics(other),
            })?;
            inverses.push(inv);
        }
        interweave(inverses)
    }

    /// Blockwise power `M_i^k`, `k >= 1`.
    pub fn power(&self, k: usize) -> Result<InterwovenMatrix> {
        assert!(k >= 1, "power requires k >= 1");
        let powered = self
            .constructors
            .iter()
            .map(|m| {
                let mut acc = m.clone();
                for _ in 1..k {
                    acc = acc.matmul(m);
                }
                acc
            })
            .collect();
        interweave(powered)
    }

    pub fn trace(&self) -> f64 {
        self.constructors.iter().map(DenseMatrix::trace).sum()
    }

    pub fn determinant(&self) -> Result<f64> {
        let mut det = 1.0;
        for m in &self.constructors {
            det *= numerics::determinant(m)?;
        }
        Ok(det)
    }

    /// True when every constructor is row-stochastic within `tol`.
    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.constructors.iter().all(|m| {
            (0..m.rows()).all(|i| (m.row(i).iter().sum::<f64>() - 1.0).abs() <= tol)
        })
    }
}

/// True iff the directed graph of nonzero entries is strongly connected.
/// Requires a nonnegative matrix.
pub fn is_irreducible(m: &DenseMatrix) -> Result<bool> {
    let n = m.require_square().map_err(InterwovenError::Numerics)?;
    for i in 0..n {
        for j in 0..n {
            if m.get(i, j) < 0.0 {
                return Err(InterwovenError::Numerics(NumericsError::NegativeEntry {
                    i,
                    j,
                }));
            }
        }
    }
    if n == 0 {
        return Ok(false);
    }
    let reaches_all = |transposed: bool| -> bool {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let w = if transposed { m.get(v, u) } else { m.get(u, v) };
                if w != 0.0 && !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    };
    Ok(reaches_all(false) && reaches_all(true))
}

/// CSV dump of a dense matrix, one row per line.
pub fn matrix_csv(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| crate::fmt_sig12(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

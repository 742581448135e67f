//! Dense linear algebra sized for this problem class: symmetric adjacency
//! spectra up to a few hundred vertices and small nonsymmetric kinetics blocks.

mod dense;
mod eig;
mod lu;

pub use dense::DenseMatrix;
pub use eig::{eig_general, eig_symmetric, EigenDecomposition};
pub(crate) use eig::sort_complex as sort_complex_values;
pub use lu::{determinant, invert, solve_linear, LuFactors};

use thiserror::Error;

/// Pivot magnitudes below this are treated as an exactly singular matrix.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not square: {rows} x {cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {deviation:e}")]
    NotSymmetric { i: usize, j: usize, deviation: f64 },
    #[error("eigenvalue iteration failed to converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("matrix is singular (pivot {pivot:e} below threshold at step {step})")]
    Singular { step: usize, pivot: f64 },
    #[error("matrix has a negative entry at ({i},{j})")]
    NegativeEntry { i: usize, j: usize },
    #[error("non-finite value encountered: {context}")]
    NonFinite { context: String },
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
}

pub type Result<T> = std::result::Result<T, NumericsError>;

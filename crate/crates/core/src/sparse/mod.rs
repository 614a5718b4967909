//! Sparse matrices, BiCGSTAB, and Perron eigen-iterations for Z-matrices.

mod banded;
mod bicgstab;
mod csr;
mod eigen;
mod precond;

use thiserror::Error;

pub use banded::{bandwidth, BandedLu};
pub use bicgstab::{bicgstab, bicgstab_with_guess, Precond, SolveStats};
pub use csr::CsrMatrix;
pub use eigen::{eigen_residual, principal_eigenpair, EigenMethod, EigenOptions, EigenResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveFailureKind {
    Breakdown,
    MaxIter,
}

/// A linear solve that did not reach its tolerance, with the best iterate seen.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveFailure {
    pub kind: SolveFailureKind,
    pub best: Vec<f64>,
    pub relative_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SparseError {
    #[error("matrix must have at least one row")]
    Empty,
    #[error("entry ({row}, {col}) outside a {n}x{n} matrix")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("duplicate entry ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error("bicgstab {:?} after {} iterations (relative residual {:.3e})", .0.kind, .0.iterations, .0.relative_residual)]
    Solve(Box<SolveFailure>),
    #[error("not a Z-matrix: entry ({row}, {col}) = {value} is positive")]
    NotZMatrix { row: usize, col: usize, value: f64 },
    #[error("eigen-iteration stagnated after {iterations} sweeps (residual {residual:.3e})")]
    Stagnation { iterations: usize, residual: f64 },
    #[error("eigenvector entry {index} is not positive ({value:e})")]
    NotPositive { index: usize, value: f64 },
}

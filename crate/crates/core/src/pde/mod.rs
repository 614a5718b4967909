//! Discretized eigenproblems: the 2D drift operator on masked grids and the
//! 1D Sturm–Liouville problems used by the orbit-family and saddle reductions.

mod assemble;
mod sturm;

use thiserror::Error;

pub use assemble::{
    assemble, bernoulli, principal_eigenvalue, BoundarySpec, Discretization, PdeEigen, Scheme, Sector,
};
pub use sturm::{robin_eigen, robin_match, solve_1d, Eigen1d, EndCondition, RobinMatch};

use crate::expr::ExprError;
use crate::sparse::SparseError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdeError {
    #[error("drift rate must be finite and non-negative, got {0}")]
    InvalidDriftRate(f64),
    #[error("assembled matrix is not a Z-matrix at ({row}, {col}) = {value}")]
    NotZMatrix { row: usize, col: usize, value: f64 },
    #[error("{0}")]
    NonPositiveWeight(String),
    #[error("invalid 1D problem: {0}")]
    Invalid1d(String),
    #[error("no sign change of the matching function on [0, {alpha_max}]")]
    NoSignChange { alpha_max: f64 },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

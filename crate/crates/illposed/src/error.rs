//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error(
        "matrix is not symmetric: max |a_ij - a_ji| = {asymmetry:.3e} exceeds {tolerance:.3e}"
    )]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error(
        "eigensolver did not converge for a dim-{dim} operator with Frobenius norm {norm:.3e}"
    )]
    EigenFailure { dim: usize, norm: f64 },

    #[error("linear solver breakdown: {0}")]
    SolverBreakdown(String),

    #[error("invalid problem specification: {0}")]
    InvalidProblem(String),
}

pub type Result<T> = std::result::Result<T, Error>;

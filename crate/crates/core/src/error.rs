//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failure modes of the exact and numeric kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Shapes or dimensions are incompatible.
    #[error("structural error: {0}")]
    Structural(String),
    /// The input lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The operation is not implemented for this degree, family or lattice shape.
    #[error("unsupported: {0}")]
    Capability(String),
    /// A truncation or tuning parameter is too small for the requested accuracy.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// The series in question does not converge for these arguments.
    #[error("convergence error: {0}")]
    Convergence(String),
    /// Floating point evaluation lost too much accuracy.
    #[error("precision error: {0}")]
    Precision(String),
}

pub type Result<T> = std::result::Result<T, Error>;

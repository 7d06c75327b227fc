//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the laboratory's operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of the operation
    /// (observation outside the family support, label out of range, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A combinatorial size guard was exceeded; the message names the limit.
    #[error("size guard exceeded: {0}")]
    Guard(String),

    /// The requested engine does not support this family/component-count
    /// combination.
    #[error("unsupported engine: {0}")]
    UnsupportedEngine(String),

    /// A regularity assumption failed (boundary parameter, singular Fisher
    /// matrix, ...).
    #[error("regularity violation: {0}")]
    Singular(String),

    /// Labels were required (complete-data operation) but absent.
    #[error("missing labels: {0}")]
    MissingLabels(String),

    /// An iterative numerical scheme did not reach its tolerance. Carries the
    /// best estimate and the last refinement difference.
    #[error("quadrature did not converge: best estimate {best}, err_est {err_est}")]
    NonConvergence { best: f64, err_est: f64 },

    /// Malformed configuration or arguments.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A numerical self-check failed (analytic vs finite-difference score,
    /// normalization drift, ...).
    #[error("numerical self-check failed: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

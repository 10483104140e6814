//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing parameter: {0}")]
    MissingParameter(&'static str),

    #[error("no convergence after {iters} iterations (last residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },

    #[error("non-finite iterate at epoch {epoch}, inner step {step}")]
    NonFinite { epoch: usize, step: usize },

    #[error("non-finite iterate on client {client} at epoch {epoch}, inner step {step}")]
    ClientNonFinite { client: usize, epoch: usize, step: usize },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

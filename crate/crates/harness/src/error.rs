//! Harness errors, grouped by the exit-code category the CLI reports.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("computation error: {0}")]
    Compute(#[from] reshuffle_core::Error),
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    pub fn dataset(msg: impl Into<String>) -> Self {
        HarnessError::Dataset(msg.into())
    }

    /// Process exit code category: 2 config, 3 dataset/io, 4 computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Dataset(_) | HarnessError::Io(_) => 3,
            HarnessError::Compute(_) => 4,
        }
    }
}

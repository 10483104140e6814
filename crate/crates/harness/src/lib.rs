//! Experiment harness: configuration, dataset ingestion, and the runner that
//! produces trace/summary CSVs for the reshuffling optimizers.

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};

//! Finite-sum composite optimization with shuffling-based methods.
//!
//! The crate implements reshuffling optimizers that pay for a single proximal
//! step per data pass (with shuffle-once and federated variants), proximal
//! SGD and proximal gradient descent baselines, the stepsize rules the
//! convergence theory prescribes, problem reformulations (importance
//! resampling, product-space federation), and the diagnostic quantities the
//! guarantees are stated in: gradient variance at the optimum, shuffling
//! radius, and without-replacement sampling statistics.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiations.

pub mod algorithms;
pub mod analysis;
pub mod error;
pub mod federated;
pub mod linalg;
pub mod losses;
pub mod problem;
pub mod prox;
pub mod reference;
pub mod reformulate;
pub mod rng;
pub mod scalar;
pub mod schedules;
pub mod trace;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` problem.
pub type Problem64 = problem::Problem<f64>;
/// `f32` problem.
pub type Problem32 = problem::Problem<f32>;
/// `f64` run trace.
pub type RunTrace64 = trace::RunTrace<f64>;
/// `f64` federated problem.
pub type FederatedProblem64 = reformulate::FederatedProblem<f64>;
/// `f64` resampled problem.
pub type ResampledProblem64 = reformulate::ResampledProblem<f64>;
/// `f64` schedule parameters.
pub type ScheduleParams64 = schedules::ScheduleParams<f64>;
/// `f64` schedule.
pub type Schedule64 = schedules::Schedule<f64>;

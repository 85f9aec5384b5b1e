//! Simulation and analysis library for step-reinforced random walks.
//!
//! The walk repeats a uniformly chosen past step with probability p and
//! takes a fresh i.i.d. step otherwise. The library provides exact
//! sequences and moment recursions for the associated martingale,
//! Monte Carlo ensembles for the Gaussian fluctuation law, reinforced
//! empirical processes with their Brownian-bridge limit, and the
//! statistical tests used to check all of these against theory.

pub mod bridge;
pub mod engine;
pub mod error;
pub mod fluctuation;
pub mod numerics;
pub mod stats;
pub mod step_model;

pub use engine::{ExactPmf, WalkPath};
pub use error::{Error, Result};
pub use numerics::{ExactMoments, VarianceInterval};
pub use stats::TestReport;
pub use step_model::{RandomStream, StepDistribution, StepKind};

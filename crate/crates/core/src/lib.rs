//! Two-stage adaptive Metropolis sampling.
//!
//! Random-walk Metropolis kernels with an optional adaptive proposal
//! covariance and an optional surrogate screening stage, the target
//! densities used to benchmark them, and ESS-based efficiency diagnostics.

pub mod adaptation;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod ode;
pub mod samplers;
pub mod targets;
pub mod trace;

//! Critical values and exact size of tests that follow conservative model
//! selection in a two-regressor Gaussian linear model.
//!
//! A test statistic whose null distribution depends on a scaled nuisance
//! coefficient gamma can be compared against several critical values: the
//! worst-case (sup) value, a parametric-bootstrap value evaluated at the
//! estimated gamma, a confidence-set (Loh) value, or the minimum of sup and
//! Loh. This crate computes the finite-sample distribution of the statistic
//! in the (rho, gamma) parametrization, evaluates each critical-value rule,
//! and measures the exact rejection probability of the resulting tests by a
//! one-dimensional integral and by Monte Carlo.

pub mod critval;
pub mod dist;
mod error;
pub mod kernel;
pub mod size;
pub mod stats;

pub use error::{Error, Result};
pub use kernel::Probability;

//! Conditional-handover cell preparation by online meta-learning.
//!
//! - [`radio`]: synthetic per-slot environments (SINR, rates, best cells).
//! - [`objective`]: utility, gradient, switching cost.
//! - [`learner`]: the expert pool, meta-learner and Madow quantizer.
//! - [`benchmarks`]: (N-best, TTT) comparators and hindsight oracles.
//! - [`harness`] and [`config`]: experiment runs, regret metrics, CSV output.

pub mod benchmarks;
pub mod config;
pub mod error;
pub mod harness;
pub mod learner;
pub mod objective;
pub mod radio;
pub mod rng;

pub use error::{Error, Result};

//! Mediation analysis for large datasets: subsampled double bootstrap
//! confidence intervals and divide-and-conquer Sobel tests for models with
//! many mediators, plus data generation and study drivers for the
//! simulation and timing experiments.

pub mod data;
pub mod dc;
pub mod error;
pub mod io;
pub mod mediation;
pub mod regression;
pub mod sdb;
pub mod simgen;
pub mod stochastics;
pub mod study;

pub use data::{Dataset, OutcomeKind};
pub use error::{Error, Result};

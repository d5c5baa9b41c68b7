//! Functional regression on group-specific covariate densities.

pub mod baselines;
pub mod diagnostics;
pub mod error;
pub mod gradient;
pub mod init;
pub mod model;
pub mod nuts;
pub mod pipeline;
pub mod simulate;

pub use error::{FrodoError, Result};

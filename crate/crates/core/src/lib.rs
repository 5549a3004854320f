//! Accelerated first-order methods with alpha-power momentum.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod io;
pub mod lyapunov;
pub mod momentum;
pub mod problems;
pub mod prox;
pub mod solvers;

pub use error::{Error, Result};

/// Library version recorded in trace metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Numerical toolbox for Bohmian trajectories and the quantities built on
//! them: conditional wavefunctions, local expectation values, pointer
//! measurements and collision-model unravellings.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditional;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod observables;
pub mod openquantum;
pub mod rng;
pub mod trajectories;
pub mod wavefield;

pub use error::{Error, Result};

/// Library version recorded in run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

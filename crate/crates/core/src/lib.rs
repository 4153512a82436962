//! Finite-horizon reinforcement learning with function approximation:
//! exact dynamic programming, simulators, linear and kernel function
//! classes, the fitted/optimistic/gradient algorithms built on them, and
//! distribution-mismatch diagnostics.

pub mod algorithms;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod linear;
pub mod mdp;
pub mod mismatch;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};

/// Crate version, recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

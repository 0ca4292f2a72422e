//! Gauge-free ("operational") quantum tomography.
//!
//! Gate sets are represented directly by observable sequence probabilities
//! and inferred from counts with a sequential Monte Carlo particle filter.

pub mod channels;
pub mod dynamics;
pub mod error;
pub mod gateset;
pub mod io;
pub mod linalg;
pub mod protocols;
pub mod rng;
pub mod run;
pub mod smc;

pub use error::{Error, Result};

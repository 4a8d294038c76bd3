//! Small-noise expansions for semilinear dissipative systems driven by
//! pure-jump Lévy noise, discretized with the exponential Euler scheme.

pub mod analysis;
pub mod error;
pub mod expansion;
pub mod levy;
pub mod math;
pub mod nonlinearity;
pub mod problem;
pub mod solvers;
pub mod validation;

pub use error::{Error, Result};

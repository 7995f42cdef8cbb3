//! Fractional exponential integrator for time-fractional stochastic PDEs on
//! (0, 1) with multiplicative Q-Wiener noise and additive fractional Brownian
//! motion, discretized by P1 finite elements in space.

pub mod catalog;
pub mod config;
pub mod driver;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod io;
pub mod mlf;
pub mod noise;
pub mod numeric;
pub mod quad;
pub mod scheme;

pub use error::{Error, Result};

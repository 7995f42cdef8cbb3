//! Mittag-Leffler function: scalar evaluation and matrix propagators.
//!
//! `E_{alpha,beta}(z) = sum_k z^k / Gamma(alpha k + beta)`. The fractional
//! solution operators of the scheme are `E_{alpha,1}(-t^alpha A_h)` and
//! `E_{alpha,alpha}(-t^alpha A_h)`; both are applied through the spectral
//! factorization of the finite-element pencil.

pub mod eval;
pub mod gamma;
mod matrix;
pub mod oracle;

pub use eval::{ml_eval, ml_eval_with_route, Route};
pub use matrix::{ml_matrix_action, ml_matrix_action_complex, PropagatorCache};
pub use oracle::{ml_asymptotic_oracle, ml_quadrature_oracle, ml_series_oracle};

use crate::error::{Error, Result};

/// The exponent pair `(alpha, beta)` of `E_{alpha,beta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MLParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidArgument(format!("Mittag-Leffler alpha = {alpha} outside (0, 2]")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("Mittag-Leffler beta = {beta} must be positive")));
        }
        Ok(Self { alpha, beta })
    }
}

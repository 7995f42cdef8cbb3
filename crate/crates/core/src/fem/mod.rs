//! One-dimensional P1 finite elements on (0, 1) with homogeneous Dirichlet
//! boundary conditions.
//!
//! The operator is `A u = -(D u')' + q u' + c0 u`. Its Galerkin discretization
//! gives the pencil `(S, M)` with `A_h = M^{-1} S` acting on nodal coefficient
//! vectors of the interior nodes.

mod assembly;
mod spectral;

use std::fmt;
use std::sync::Arc;

pub use assembly::{assemble, l2_project, mass_norm, OperatorAssembly, Tridiagonal};
pub use spectral::{frac_power_apply, real_part, spectral_factorize, SpectralFactorization, CONDITION_LIMIT};

use crate::error::{Error, Result};

/// Uniform mesh of (0, 1) described by its interior nodes `x_k = k h`, `k = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    n: usize,
    h: f64,
    nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Coordinate of global node `k` in `0..=n+1` (boundary nodes included).
    pub fn global_node(&self, k: usize) -> f64 {
        k as f64 * self.h
    }
}

/// Uniform interior-node mesh with `n >= 2` unknowns.
pub fn build_mesh(n: usize) -> Result<Mesh1D> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("mesh needs at least 2 interior nodes, got {n}")));
    }
    let h = 1.0 / (n + 1) as f64;
    let nodes = (1..=n).map(|k| k as f64 * h).collect();
    Ok(Mesh1D { n, h, nodes })
}

pub type ScalarField = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Coefficients of `A u = -(D u')' + q u' + c0 u`.
#[derive(Clone)]
pub struct CoefficientField {
    pub diffusion: ScalarField,
    pub advection: ScalarField,
    /// Garding shift added to the operator.
    pub c0: f64,
    /// Ellipticity lower bound required of `D` at every quadrature point.
    pub c1: f64,
}

impl CoefficientField {
    pub fn constant(diffusion: f64, advection: f64, c0: f64) -> Self {
        Self {
            diffusion: Arc::new(move |_| diffusion),
            advection: Arc::new(move |_| advection),
            c0,
            c1: 0.0,
        }
    }

    /// The Laplacian, `D = 1`, `q = 0`, no shift.
    pub fn laplacian() -> Self {
        Self::constant(1.0, 0.0, 0.0)
    }
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("c0", &self.c0)
            .field("c1", &self.c1)
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_examples() {
        let m = build_mesh(3).unwrap();
        assert_eq!(m.h(), 0.25);
        assert_eq!(m.nodes(), &[0.25, 0.5, 0.75]);
        assert!(build_mesh(1).is_err());
        let m = build_mesh(63).unwrap();
        assert_eq!(m.h(), 1.0 / 64.0);
        assert!((m.h() * 64.0 - 1.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn nodes_strictly_increasing() {
        let m = build_mesh(100).unwrap();
        assert!(m.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!((m.h() * 101.0 - 1.0).abs() <= f64::EPSILON);
    }
}

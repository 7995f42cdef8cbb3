use nalgebra::DMatrix;

use super::{CoefficientField, Mesh1D};
use crate::error::{Error, Result};

const GAUSS2: [(f64, f64); 2] = [(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)];
const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_8),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_8),
];

/// Tridiagonal `n x n` matrix stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self { lower: vec![0.0; n - 1], diag: vec![0.0; n], upper: vec![0.0; n - 1] }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self { lower: vec![0.0; d.len() - 1], diag: d.to_vec(), upper: vec![0.0; d.len() - 1] }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.diag[i] += v;
        } else if j == i + 1 {
            self.upper[i] += v;
        } else if i == j + 1 {
            self.lower[j] += v;
        } else {
            unreachable!("entry ({i}, {j}) outside the tridiagonal band");
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.upper[i];
                m[(i + 1, i)] = self.lower[i];
            }
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        self.lower == self.upper
    }

    /// Solve `T x = b` by the Thomas algorithm (no pivoting; fine for diagonally dominant `T`).
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut piv = self.diag[0];
        if piv == 0.0 {
            return Err(Error::Singular("zero pivot in tridiagonal solve".into()));
        }
        c[0] = if n > 1 { self.upper[0] / piv } else { 0.0 };
        d[0] = b[0] / piv;
        for i in 1..n {
            piv = self.diag[i] - self.lower[i - 1] * c[i - 1];
            if piv == 0.0 || !piv.is_finite() {
                return Err(Error::Singular(format!("zero pivot at row {i} in tridiagonal solve")));
            }
            if i + 1 < n {
                c[i] = self.upper[i] / piv;
            }
            d[i] = (b[i] - self.lower[i - 1] * d[i - 1]) / piv;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}

/// Mass and stiffness matrices of the P1 discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorAssembly {
    pub mass: Tridiagonal,
    pub stiffness: Tridiagonal,
    pub n: usize,
}

/// Assemble mass `M_jk = (phi_k, phi_j)` and stiffness
/// `S_jk = (D phi_k', phi_j') + (q phi_k', phi_j) + c0 M_jk` with two-point
/// Gauss quadrature per element. Dirichlet nodes are eliminated.
pub fn assemble(mesh: &Mesh1D, coeff: &CoefficientField) -> Result<OperatorAssembly> {
    let n = mesh.n();
    let h = mesh.h();
    let mut mass = Tridiagonal::zeros(n);
    let mut stiff = Tridiagonal::zeros(n);
    let dphi = [-1.0 / h, 1.0 / h];

    for e in 0..=n {
        let (xl, xr) = (mesh.global_node(e), mesh.global_node(e + 1));
        let mut me = [[0.0; 2]; 2];
        let mut ke = [[0.0; 2]; 2];
        for &(xi, w) in &GAUSS2 {
            let x = 0.5 * (xl + xr) + 0.5 * h * xi;
            let w = 0.5 * h * w;
            let d = (coeff.diffusion)(x);
            let q = (coeff.advection)(x);
            if !(d.is_finite() && q.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite coefficient at x = {x}")));
            }
            if !(d > coeff.c1 && d > 0.0) {
                return Err(Error::Ellipticity { x, value: d });
            }
            let phi = [(xr - x) / h, (x - xl) / h];
            for a in 0..2 {
                for b in 0..2 {
                    me[a][b] += w * (phi[a] * phi[b]);
                    ke[a][b] += w * d * (dphi[a] * dphi[b]) + w * q * (dphi[b] * phi[a]);
                }
            }
        }
        // interior indices of the element's two nodes
        let idx = [e.checked_sub(1).filter(|&i| i < n), (e < n).then_some(e)];
        for a in 0..2 {
            for b in 0..2 {
                if let (Some(i), Some(j)) = (idx[a], idx[b]) {
                    mass.add(i, j, me[a][b]);
                    stiff.add(i, j, ke[a][b]);
                }
            }
        }
    }
    if coeff.c0 != 0.0 {
        for i in 0..n {
            stiff.diag[i] += coeff.c0 * mass.diag[i];
        }
        for i in 0..n - 1 {
            stiff.lower[i] += coeff.c0 * mass.lower[i];
            stiff.upper[i] += coeff.c0 * mass.upper[i];
        }
    }
    Ok(OperatorAssembly { mass, stiffness: stiff, n })
}

/// L2 projection onto the P1 space: solves `M p = b`, `b_j = (f, phi_j)`,
/// with four-point Gauss quadrature per element.
pub fn l2_project<F: Fn(f64) -> f64>(mesh: &Mesh1D, assembly: &OperatorAssembly, f: F) -> Result<Vec<f64>> {
    let n = mesh.n();
    let h = mesh.h();
    let mut b = vec![0.0; n];
    for e in 0..=n {
        let (xl, xr) = (mesh.global_node(e), mesh.global_node(e + 1));
        let mut be = [0.0; 2];
        for &(xi, w) in &GAUSS4 {
            let x = 0.5 * (xl + xr) + 0.5 * h * xi;
            let fx = f(x) * 0.5 * h * w;
            be[0] += fx * (xr - x) / h;
            be[1] += fx * (x - xl) / h;
        }
        if e >= 1 {
            b[e - 1] += be[0];
        }
        if e < n {
            b[e] += be[1];
        }
    }
    assembly.mass.solve(&b)
}

/// Mass-weighted norm `sqrt(v^T M v)`, the L2 norm of the P1 function with nodal values `v`.
pub fn mass_norm(mass: &Tridiagonal, v: &[f64]) -> f64 {
    let mv = mass.mul_vec(v);
    v.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
}

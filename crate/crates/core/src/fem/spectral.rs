use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use super::OperatorAssembly;
use crate::error::{Error, Result};

/// Largest accepted condition estimate of the eigenvector matrix.
pub const CONDITION_LIMIT: f64 = 1e8;
const RESIDUAL_TOL: f64 = 1e-10;
const IMAG_DISCARD: f64 = 1e-10;

/// Eigendecomposition `S V = M V diag(lambda)` of the finite-element pencil.
///
/// Coordinates in the eigenbasis are obtained by solving against a stored LU
/// factor of `V`; the inverse is never formed.
#[derive(Debug, Clone)]
pub struct SpectralFactorization {
    eigenvalues: Vec<Complex64>,
    right_vectors: DMatrix<Complex64>,
    condition: f64,
    residual: f64,
    symmetric: bool,
    lu: LU<Complex64, Dyn, Dyn>,
}

impl SpectralFactorization {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues sorted by real part, ascending.
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn right_vectors(&self) -> &DMatrix<Complex64> {
        &self.right_vectors
    }

    /// 2-norm condition number of `V`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// `||S V - M V diag(lambda)||_F / ||S||_F`.
    pub fn relative_residual(&self) -> f64 {
        self.residual
    }

    /// True when the pencil was symmetric and the real symmetric solver was used.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::InvalidArgument(format!("vector of length {len} for operator of dimension {}", self.n())));
        }
        Ok(())
    }

    /// Eigen-coordinates `c` with `V c = v`.
    pub fn coordinates(&self, v: &[f64]) -> Result<DVector<Complex64>> {
        self.check_dim(v.len())?;
        let rhs = DVector::from_iterator(v.len(), v.iter().map(|&x| Complex64::new(x, 0.0)));
        self.lu
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("eigenvector matrix".into()))
    }

    /// `V c`.
    pub fn synthesize(&self, c: &DVector<Complex64>) -> DVector<Complex64> {
        &self.right_vectors * c
    }

    /// Apply `f(lambda_i)` in the eigenbasis: `V diag(f(lambda)) V^{-1} v`.
    pub fn apply_complex<F>(&self, v: &[f64], mut f: F) -> Result<DVector<Complex64>>
    where
        F: FnMut(Complex64) -> Result<Complex64>,
    {
        let mut c = self.coordinates(v)?;
        for (ci, &lam) in c.iter_mut().zip(&self.eigenvalues) {
            *ci *= f(lam)?;
        }
        Ok(self.synthesize(&c))
    }
}

/// Real part of `w`, failing when the discarded imaginary part exceeds
/// `1e-10 * ||Re w||`.
pub fn real_part(w: &DVector<Complex64>) -> Result<Vec<f64>> {
    let norm = w.iter().map(|z| z.re * z.re).sum::<f64>().sqrt();
    let residue = w.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    if residue > IMAG_DISCARD * norm && residue > f64::MIN_POSITIVE {
        return Err(Error::ImaginaryResidue { residue, norm });
    }
    Ok(w.iter().map(|z| z.re).collect())
}

/// Generalized eigendecomposition of the assembled pencil.
pub fn spectral_factorize(assembly: &OperatorAssembly) -> Result<SpectralFactorization> {
    let symmetric = assembly.stiffness.is_symmetric();
    factorize_dense(&assembly.stiffness.to_dense(), &assembly.mass.to_dense(), symmetric)
}

impl SpectralFactorization {
    /// Factorize a dense pencil `(S, M)` with `M` symmetric positive definite.
    pub fn from_dense(stiffness: &DMatrix<f64>, mass: &DMatrix<f64>) -> Result<Self> {
        let symmetric = stiffness == &stiffness.transpose();
        factorize_dense(stiffness, mass, symmetric)
    }
}

fn factorize_dense(s: &DMatrix<f64>, m: &DMatrix<f64>, symmetric: bool) -> Result<SpectralFactorization> {
    let n = s.nrows();
    if n == 0 || s.ncols() != n || m.shape() != (n, n) {
        return Err(Error::InvalidArgument(format!("pencil of shape {:?}/{:?}", s.shape(), m.shape())));
    }
    if s.iter().chain(m.iter()).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite pencil entry".into()));
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let lt = l.transpose();
    // C = L^{-1} S L^{-T}
    let x = l.solve_lower_triangular(s).ok_or_else(|| Error::Singular("Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Singular("Cholesky factor".into()))?
        .transpose();

    let (lambdas, y): (Vec<Complex64>, DMatrix<Complex64>) = if symmetric {
        let sym = (&c + c.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let v = lt
            .solve_upper_triangular(&eig.eigenvectors)
            .ok_or_else(|| Error::Singular("Cholesky factor".into()))?;
        (
            eig.eigenvalues.iter().map(|&l| Complex64::new(l, 0.0)).collect(),
            v.map(|x| Complex64::new(x, 0.0)),
        )
    } else {
        let lambdas: Vec<Complex64> = c.complex_eigenvalues().iter().copied().collect();
        let cc = c.map(|x| Complex64::new(x, 0.0));
        let mut u = DMatrix::<Complex64>::zeros(n, n);
        for (j, &lam) in lambdas.iter().enumerate() {
            u.set_column(j, &inverse_iteration(&cc, lam)?);
        }
        let ltc = lt.map(|x| Complex64::new(x, 0.0));
        let v = ltc
            .solve_upper_triangular(&u)
            .ok_or_else(|| Error::Singular("Cholesky factor".into()))?;
        (lambdas, v)
    };

    // Sort by real part, then imaginary part.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        lambdas[a].re.total_cmp(&lambdas[b].re).then(lambdas[a].im.total_cmp(&lambdas[b].im))
    });
    let eigenvalues: Vec<Complex64> = order.iter().map(|&i| lambdas[i]).collect();
    let mut v = DMatrix::<Complex64>::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        let col = y.column(i);
        let norm = col.norm();
        v.set_column(j, &(col / Complex64::new(norm, 0.0)));
    }

    for (i, lam) in eigenvalues.iter().enumerate() {
        if !(lam.re > 0.0) {
            return Err(Error::CoercivityViolation { index: i, real: lam.re });
        }
    }

    let sc = s.map(|x| Complex64::new(x, 0.0));
    let mc = m.map(|x| Complex64::new(x, 0.0));
    let vd = DMatrix::from_fn(n, n, |i, j| v[(i, j)] * eigenvalues[j]);
    let residual = (&sc * &v - &mc * vd).norm() / s.norm();
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::Singular(format!("pencil residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}")));
    }

    let sv = v.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::IllConditioned { condition, threshold: CONDITION_LIMIT });
    }
    let lu = v.clone().lu();
    Ok(SpectralFactorization { eigenvalues, right_vectors: v, condition, residual, symmetric, lu })
}

/// Eigenvector of `c` for the eigenvalue estimate `lam` by shifted inverse iteration.
fn inverse_iteration(c: &DMatrix<Complex64>, lam: Complex64) -> Result<DVector<Complex64>> {
    let n = c.nrows();
    let scale = c.norm().max(1.0);
    // A small perturbation keeps the shifted matrix numerically invertible.
    let mu = lam + Complex64::new(1e-13, 1e-13) * scale;
    let shifted = c - DMatrix::from_diagonal_element(n, n, mu);
    let lu = shifted.lu();
    let mut x = DVector::from_fn(n, |i, _| Complex64::new(1.0 + (i as f64 * 0.618).fract(), (i as f64 * 0.382).fract()));
    for _ in 0..3 {
        let y = lu
            .solve(&x)
            .ok_or_else(|| Error::Singular(format!("inverse iteration at eigenvalue {lam}")))?;
        let norm = y.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Singular(format!("inverse iteration at eigenvalue {lam}")));
        }
        x = y / Complex64::new(norm, 0.0);
    }
    Ok(x)
}

/// `V diag(lambda_i^gamma) V^{-1} v` with the principal branch, `gamma` in `[-1, 1]`.
pub fn frac_power_apply(fac: &SpectralFactorization, gamma: f64, v: &[f64]) -> Result<Vec<f64>> {
    if !(-1.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("fractional power {gamma} outside [-1, 1]")));
    }
    if gamma == 0.0 {
        fac.check_dim(v.len())?;
        return Ok(v.to_vec());
    }
    let w = fac.apply_complex(v, |lam| Ok(if gamma == 1.0 { lam } else { lam.powf(gamma) }))?;
    real_part(&w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, build_mesh, CoefficientField};
    use std::f64::consts::PI;

    fn p1_eigs(n: usize) -> Vec<f64> {
        let h = 1.0 / (n + 1) as f64;
        (1..=n)
            .map(|k| {
                let c = (k as f64 * PI * h).cos();
                6.0 / (h * h) * (1.0 - c) / (2.0 + c)
            })
            .collect()
    }

    #[test]
    fn laplacian_spectrum_matches_closed_form() {
        for &n in &[3usize, 15, 63] {
            let mesh = build_mesh(n).unwrap();
            let asm = assemble(&mesh, &CoefficientField::laplacian()).unwrap();
            let fac = spectral_factorize(&asm).unwrap();
            let exact = p1_eigs(n);
            let top = exact[n - 1];
            for (l, e) in fac.eigenvalues().iter().zip(&exact) {
                assert!((l.re - e).abs() <= 1e-11 * top, "{l} vs {e}");
                assert!(l.im.abs() <= 1e-12 * top);
            }
            assert!(fac.relative_residual() <= 1e-10);
        }
    }

    #[test]
    fn smallest_eigenvalue_near_pi_squared() {
        let mesh = build_mesh(63).unwrap();
        let fac = spectral_factorize(&assemble(&mesh, &CoefficientField::laplacian()).unwrap()).unwrap();
        let h = mesh.h();
        let err = (fac.eigenvalues()[0].re - PI * PI).abs();
        assert!(err < 2.0 * h * h * PI.powi(4) / 12.0 + 1e-9, "err {err}");
    }

    #[test]
    fn advection_spectrum_is_coercive() {
        let mesh = build_mesh(31).unwrap();
        let asm = assemble(&mesh, &CoefficientField::constant(1.0, 10.0, 0.0)).unwrap();
        assert!(!asm.stiffness.is_symmetric());
        let fac = spectral_factorize(&asm).unwrap();
        assert!(fac.eigenvalues().iter().all(|l| l.re > 0.0));
        assert!(fac.relative_residual() <= 1e-10);
        assert!(fac.condition() <= CONDITION_LIMIT);
    }

    #[test]
    fn negative_shift_breaks_coercivity() {
        let mesh = build_mesh(7).unwrap();
        let asm = assemble(&mesh, &CoefficientField::constant(1.0, 0.0, -20.0)).unwrap();
        assert!(matches!(spectral_factorize(&asm), Err(Error::CoercivityViolation { index: 0, .. })));
    }

    #[test]
    fn fractional_powers() {
        let mesh = build_mesh(15).unwrap();
        let asm = assemble(&mesh, &CoefficientField::constant(1.0, 2.0, 0.5)).unwrap();
        let fac = spectral_factorize(&asm).unwrap();
        let v: Vec<f64> = mesh.nodes().iter().map(|x| x * (1.0 - x) + 0.1 * (7.0 * x).sin()).collect();
        assert_eq!(frac_power_apply(&fac, 0.0, &v).unwrap(), v);

        let one = frac_power_apply(&fac, 1.0, &v).unwrap();
        let direct = asm.mass.solve(&asm.stiffness.mul_vec(&v)).unwrap();
        let norm = direct.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff = one.iter().zip(&direct).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(diff <= 1e-10 * norm, "{diff} vs {norm}");

        let half = frac_power_apply(&fac, 0.5, &v).unwrap();
        let twice = frac_power_apply(&fac, 0.5, &half).unwrap();
        let diff = twice.iter().zip(&one).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(diff <= 1e-9 * norm);

        assert!(frac_power_apply(&fac, 1.5, &v).is_err());
    }

    #[test]
    fn diagonal_pencil() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let m = DMatrix::identity(2, 2);
        let fac = SpectralFactorization::from_dense(&s, &m).unwrap();
        assert_eq!(fac.eigenvalues()[0].re, 1.0);
        assert_eq!(fac.eigenvalues()[1].re, 2.0);
        assert!((fac.condition() - 1.0).abs() < 1e-12);
    }
}

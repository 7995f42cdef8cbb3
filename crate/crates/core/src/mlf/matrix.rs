use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{ml_eval, MLParams};
use crate::error::{Error, Result};
use crate::fem::{real_part, SpectralFactorization};

/// `E_{alpha,beta}(-scale A_h) v` as a complex vector.
pub fn ml_matrix_action_complex(
    params: MLParams,
    scale: f64,
    fac: &SpectralFactorization,
    v: &[f64],
) -> Result<DVector<Complex64>> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("propagator scale {scale} must be finite and non-negative")));
    }
    fac.apply_complex(v, |lam| ml_eval(params, -lam * scale))
}

/// `E_{alpha,beta}(-scale A_h) v`, real part after the imaginary-residue check.
pub fn ml_matrix_action(params: MLParams, scale: f64, fac: &SpectralFactorization, v: &[f64]) -> Result<Vec<f64>> {
    real_part(&ml_matrix_action_complex(params, scale, fac, v)?)
}

/// Per-lag eigenvalue weights of the two solution operators.
///
/// Row `k` holds lag `t = (k+1) dt`: `s1_values[k][i] = E_{alpha,1}(-t^alpha lambda_i)` and
/// `s2_weighted[k][i] = t^(alpha-1) E_{alpha,alpha}(-t^alpha lambda_i)`.
#[derive(Debug, Clone)]
pub struct PropagatorCache {
    pub alpha: f64,
    pub dt: f64,
    pub lags: Vec<f64>,
    pub s1_values: Vec<Vec<Complex64>>,
    pub s2_weighted: Vec<Vec<Complex64>>,
}

impl PropagatorCache {
    pub fn build(fac: &SpectralFactorization, alpha: f64, dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || steps == 0 {
            return Err(Error::InvalidArgument(format!("propagator grid dt = {dt}, M = {steps}")));
        }
        let p1 = MLParams::new(alpha, 1.0)?;
        let pa = MLParams::new(alpha, alpha)?;
        let lags: Vec<f64> = (1..=steps).map(|k| k as f64 * dt).collect();
        let rows: Vec<(Vec<Complex64>, Vec<Complex64>)> = lags
            .par_iter()
            .map(|&t| {
                let ta = t.powf(alpha);
                let w = t.powf(alpha - 1.0);
                let mut s1 = Vec::with_capacity(fac.n());
                let mut s2 = Vec::with_capacity(fac.n());
                for &lam in fac.eigenvalues() {
                    let z = -lam * ta;
                    s1.push(ml_eval(p1, z)?);
                    s2.push(ml_eval(pa, z)? * w);
                }
                Ok((s1, s2))
            })
            .collect::<Result<_>>()?;
        let (s1_values, s2_weighted) = rows.into_iter().unzip();
        Ok(Self { alpha, dt, lags, s1_values, s2_weighted })
    }

    pub fn steps(&self) -> usize {
        self.lags.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, build_mesh, CoefficientField};
    use crate::mlf::gamma::gamma;
    use nalgebra::DMatrix;

    #[test]
    fn diagonal_pencil_exponential() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let fac = SpectralFactorization::from_dense(&s, &DMatrix::identity(2, 2)).unwrap();
        let p = MLParams::new(1.0, 1.0).unwrap();
        for &t in &[0.0, 0.3, 1.7] {
            let w = ml_matrix_action(p, t, &fac, &[1.0, 1.0]).unwrap();
            assert!((w[0] - (-t).exp()).abs() < 1e-15);
            assert!((w[1] - (-2.0 * t).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_scale_is_reciprocal_gamma() {
        let mesh = build_mesh(6).unwrap();
        let fac = crate::fem::spectral_factorize(&assemble(&mesh, &CoefficientField::constant(1.0, 3.0, 0.0)).unwrap())
            .unwrap();
        let v = [1.0, -2.0, 0.5, 3.0, 0.0, 1.0];
        let p = MLParams::new(0.75, 0.75).unwrap();
        let w = ml_matrix_action(p, 0.0, &fac, &v).unwrap();
        let g = 1.0 / gamma(0.75);
        for (a, b) in w.iter().zip(&v) {
            assert!((a - g * b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn rejects_negative_scale() {
        let s = DMatrix::identity(2, 2);
        let fac = SpectralFactorization::from_dense(&s, &s).unwrap();
        let p = MLParams::new(0.5, 1.0).unwrap();
        assert!(ml_matrix_action(p, -1.0, &fac, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn cache_shape_and_bounds() {
        let mesh = build_mesh(7).unwrap();
        let fac = crate::fem::spectral_factorize(&assemble(&mesh, &CoefficientField::laplacian()).unwrap()).unwrap();
        let cache = PropagatorCache::build(&fac, 0.75, 0.01, 20).unwrap();
        assert_eq!(cache.lags.len(), 20);
        assert_eq!(cache.s1_values.len(), 20);
        assert!(cache.s1_values.iter().all(|r| r.len() == 7));
        assert_eq!(cache.lags[19], 20.0 * 0.01);
        for row in &cache.s1_values {
            for v in row {
                assert!(v.re > 0.0 && v.re <= 1.0 && v.im == 0.0);
            }
        }
    }
}

//! Karhunen-Loeve sampling of the Q-Wiener process and of the per-mode
//! fractional Brownian motions.
//!
//! Both processes share the covariance operator `Q e_i = q_i e_i` with
//! `q_i = i^{-r}` and `e_i(x) = sqrt(2) sin(i pi x)`. Wiener increments are
//! i.i.d. `N(0, dt)`; fBm increments are exact Gaussian vectors drawn through
//! the Cholesky factor of their covariance.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

const TAG_WIENER: u64 = 0x5749_454e;
const TAG_FBM: u64 = 0x4642_4d00;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub n_modes: usize,
    /// Eigenvalue decay exponent `r` of `q_i = i^{-r}`.
    pub decay: f64,
    pub hurst: f64,
}

impl NoiseSpec {
    pub fn new(n_modes: usize, decay: f64, hurst: f64) -> Result<Self> {
        let spec = Self { n_modes, decay, hurst };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::Noise("at least one noise mode is required".into()));
        }
        if !(self.decay > 1.0 && self.decay.is_finite()) {
            return Err(Error::Noise(format!("decay r = {} must exceed 1 for a trace-class Q", self.decay)));
        }
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::Noise(format!("Hurst index {} outside (0, 1)", self.hurst)));
        }
        Ok(())
    }

    /// `sqrt(q_i)` for modes `i = 1..=N`.
    pub fn sqrt_q(&self) -> Vec<f64> {
        (1..=self.n_modes).map(|i| (i as f64).powf(-0.5 * self.decay)).collect()
    }

    /// Truncated trace `sum_{i<=N} q_i`.
    pub fn trace(&self) -> f64 {
        (1..=self.n_modes).map(|i| (i as f64).powf(-self.decay)).sum()
    }
}

/// Basis function `e_i(x) = sqrt(2) sin(i pi x)`, `i >= 1`.
pub fn basis(i: usize, x: f64) -> f64 {
    std::f64::consts::SQRT_2 * (i as f64 * std::f64::consts::PI * x).sin()
}

/// Increments of both processes on a uniform grid of `[0, T]`.
///
/// `wiener[i][j]` and `fbm[i][j]` are the increments of mode `i + 1` over
/// `[t_j, t_{j+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub t_final: f64,
    pub steps: usize,
    pub wiener: Vec<Vec<f64>>,
    pub fbm: Vec<Vec<f64>>,
    pub seed: u64,
}

impl NoisePath {
    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn n_modes(&self) -> usize {
        self.wiener.len()
    }

    pub fn grid(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.steps).map(|j| j as f64 * dt).collect()
    }
}

/// Covariance of fBm increments on the uniform grid `t_j = j T / M`.
pub fn fbm_increment_covariance(hurst: f64, t_final: f64, steps: usize) -> Result<DMatrix<f64>> {
    if !(hurst > 0.0 && hurst < 1.0) || steps == 0 || !(t_final > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "fBm covariance needs H in (0, 1), M >= 1, T > 0 (got {hurst}, {steps}, {t_final})"
        )));
    }
    let dt = t_final / steps as f64;
    let h2 = 2.0 * hurst;
    // Stationary increments: the entry depends only on the lag, and
    // Cov = dt^{2H} rho(k) with rho(k) = (|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H}) / 2.
    let scale = dt.powf(h2);
    let rho: Vec<f64> = (0..steps)
        .map(|k| {
            if hurst == 0.5 {
                if k == 0 { 1.0 } else { 0.0 }
            } else {
                let k = k as f64;
                0.5 * ((k + 1.0).powf(h2) + (k - 1.0).abs().powf(h2) - 2.0 * k.powf(h2))
            }
        })
        .collect();
    Ok(DMatrix::from_fn(steps, steps, |i, j| scale * rho[i.abs_diff(j)]))
}

/// Lower Cholesky factor of the fBm increment covariance, reusable across paths.
#[derive(Debug, Clone)]
pub struct FbmFactor {
    pub hurst: f64,
    pub t_final: f64,
    pub steps: usize,
    // Row-major lower triangle.
    rows: Vec<Vec<f64>>,
}

impl FbmFactor {
    pub fn new(hurst: f64, t_final: f64, steps: usize) -> Result<Self> {
        let cov = fbm_increment_covariance(hurst, t_final, steps)?;
        let chol = cov.cholesky().ok_or(Error::Cholesky { hurst, steps })?;
        let l = chol.l();
        let rows = (0..steps).map(|i| (0..=i).map(|j| l[(i, j)]).collect()).collect();
        Ok(Self { hurst, t_final, steps, rows })
    }

    /// `L z`.
    pub fn correlate(&self, z: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// SplitMix64 finalizer applied to `(seed, tag, mode)`.
pub fn substream_seed(seed: u64, tag: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(mix(seed) ^ tag) ^ index)
}

fn normals(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Draw a path of `steps` increments over `[0, t_final]`.
pub fn sample_path(spec: &NoiseSpec, t_final: f64, steps: usize, seed: u64) -> Result<NoisePath> {
    let factor = FbmFactor::new(spec.hurst, t_final, steps)?;
    sample_path_with(spec, &factor, seed)
}

/// Same as [`sample_path`] with a precomputed covariance factor.
pub fn sample_path_with(spec: &NoiseSpec, factor: &FbmFactor, seed: u64) -> Result<NoisePath> {
    spec.validate()?;
    if factor.hurst != spec.hurst {
        return Err(Error::Noise(format!("factor built for H = {}, spec has H = {}", factor.hurst, spec.hurst)));
    }
    let steps = factor.steps;
    let sdt = (factor.t_final / steps as f64).sqrt();
    let mut wiener = Vec::with_capacity(spec.n_modes);
    let mut fbm = Vec::with_capacity(spec.n_modes);
    for i in 0..spec.n_modes {
        let w = normals(substream_seed(seed, TAG_WIENER, i as u64), steps);
        wiener.push(w.into_iter().map(|z| z * sdt).collect());
        let z = normals(substream_seed(seed, TAG_FBM, i as u64), steps);
        fbm.push(factor.correlate(&z));
    }
    Ok(NoisePath { t_final: factor.t_final, steps, wiener, fbm, seed })
}

/// Coarsen a path by summing `factor` consecutive increments of every mode.
pub fn aggregate(path: &NoisePath, factor: usize) -> Result<NoisePath> {
    if factor == 0 || path.steps % factor != 0 {
        return Err(Error::Noise(format!("aggregation factor {factor} does not divide M = {}", path.steps)));
    }
    let coarsen = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
        rows.iter()
            .map(|row| row.chunks(factor).map(|c| c.iter().copied().collect::<CompensatedSum>().value()).collect())
            .collect()
    };
    Ok(NoisePath {
        t_final: path.t_final,
        steps: path.steps / factor,
        wiener: coarsen(&path.wiener),
        fbm: coarsen(&path.fbm),
        seed: path.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_covariance_is_diagonal() {
        let c = fbm_increment_covariance(0.5, 1.0, 8).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let e = if i == j { 0.125 } else { 0.0 };
                assert_eq!(c[(i, j)], e);
            }
        }
    }

    #[test]
    fn covariance_diagonal_is_dt_to_2h() {
        for &h in &[0.6, 0.75, 0.9] {
            let c = fbm_increment_covariance(h, 2.0, 10).unwrap();
            for i in 0..10 {
                assert!((c[(i, i)] - 0.2f64.powf(2.0 * h)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn covariance_agrees_with_process_covariance() {
        // Cov(B(t), B(s)) at t = 1, s = 2 from summed increments on a unit grid.
        let h = 0.75;
        let c = fbm_increment_covariance(h, 2.0, 2).unwrap();
        let cov_1_2 = c[(0, 0)] + c[(0, 1)];
        let direct = 0.5 * (1.0 + 2f64.powf(2.0 * h) - 1.0);
        assert!((cov_1_2 - direct).abs() < 1e-14);
        assert!((direct - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn determinism_and_independence_of_seeds() {
        let spec = NoiseSpec::new(4, 3.0, 0.7).unwrap();
        let a = sample_path(&spec, 1.0, 16, 42).unwrap();
        let b = sample_path(&spec, 1.0, 16, 42).unwrap();
        let c = sample_path(&spec, 1.0, 16, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.wiener, c.wiener);
        assert_ne!(a.wiener[0], a.wiener[1]);
    }

    #[test]
    fn aggregation() {
        let spec = NoiseSpec::new(3, 2.0, 0.8).unwrap();
        let p = sample_path(&spec, 1.0, 16, 7).unwrap();
        assert_eq!(aggregate(&p, 1).unwrap(), p);
        assert!(aggregate(&p, 3).is_err());
        let one = aggregate(&p, 16).unwrap();
        for i in 0..3 {
            let total: CompensatedSum = p.wiener[i].iter().copied().collect();
            assert_eq!(one.wiener[i][0], total.value());
        }
        let two = aggregate(&p, 4).unwrap();
        for i in 0..3 {
            let fine: CompensatedSum = p.fbm[i].iter().copied().collect();
            let coarse: CompensatedSum = two.fbm[i].iter().copied().collect();
            assert!((fine.value() - coarse.value()).abs() <= 4.0 * f64::EPSILON * fine.value().abs().max(1e-300));
        }
    }

    #[test]
    fn spec_validation() {
        assert!(NoiseSpec::new(8, 1.0, 0.75).is_err());
        assert!(NoiseSpec::new(0, 2.0, 0.75).is_err());
        assert!(NoiseSpec::new(8, 2.0, 1.0).is_err());
    }
}

//! Monte Carlo strong-convergence studies, rate regression and numerical
//! checks of the analytic estimates (contraction, smoothing, isometries).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::fem::{mass_norm, CoefficientField, SpectralFactorization, Tridiagonal};
use crate::mlf::{ml_eval, MLParams, PropagatorCache};
use crate::noise::{aggregate, fbm_increment_covariance, sample_path_with, substream_seed, FbmFactor, NoiseSpec};
use crate::numeric::CompensatedSum;
use crate::scheme::{build_propagators, run_with_cache, Discretization, FractionalParams, ProblemSpec};

const TAG_SAMPLE: u64 = 0x5341_4d50;
const MAX_FAILURE_FRACTION: f64 = 0.01;

/// `(time_rate, space_rate) = (min(alpha(2H+beta-1), 2-2alpha)/2, 2H+beta-1)`.
pub fn theoretical_rates(p: &FractionalParams) -> (f64, f64) {
    let space = 2.0 * p.hurst + p.beta - 1.0;
    ((p.alpha * space).min(2.0 - 2.0 * p.alpha) / 2.0, space)
}

/// Least-squares slope of `log error` against `log axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// 95% confidence half-width, `t_{0.975, n-2} * slope_stderr`.
    pub half_width: f64,
}

impl RateFit {
    pub fn contains(&self, value: f64) -> bool {
        (self.slope - value).abs() <= self.half_width
    }
}

pub fn fit_rate(axis: &[f64], errors: &[f64]) -> Result<RateFit> {
    if axis.len() != errors.len() {
        return Err(Error::Study(format!("{} axis values but {} errors", axis.len(), errors.len())));
    }
    if axis.len() < 3 {
        return Err(Error::Study(format!("rate fit needs at least 3 points, got {}", axis.len())));
    }
    if axis.iter().chain(errors).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Study("rate fit needs positive finite axis and error values".into()));
    }
    let n = axis.len() as f64;
    let x: Vec<f64> = axis.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Study("rate fit needs at least two distinct axis values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let df = n - 2.0;
    let slope_stderr = (rss / df / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Study(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(RateFit { slope, intercept, slope_stderr, half_width: t * slope_stderr })
}

/// Result of a strong-convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// `"temporal"` or `"spatial"`.
    pub kind: String,
    /// Step sizes (temporal) or mesh sizes (spatial), coarse to fine.
    pub axis: Vec<f64>,
    /// Resolution labels matching `axis`: step counts or node counts.
    pub levels: Vec<usize>,
    pub reference: usize,
    /// Root-mean-square strong error at the final time.
    pub error: Vec<f64>,
    pub stderr: Vec<f64>,
    pub slope: f64,
    /// 95% confidence half-width of the slope.
    pub ci: f64,
    pub theory_slope: f64,
    pub n_mc: usize,
    pub failed_runs: usize,
    pub seed: u64,
    pub sample_seeds: Vec<u64>,
    /// Fitted exponent of the one-step increments on the reference runs (temporal only).
    pub regularity_slope: Option<f64>,
    pub reduction: String,
    pub config: serde_json::Value,
}

impl ConvergenceReport {
    pub fn fit(&self) -> RateFit {
        RateFit { slope: self.slope, intercept: f64::NAN, slope_stderr: f64::NAN, half_width: self.ci }
    }

    pub fn ci_overlaps(&self, value: f64) -> bool {
        (self.slope - value).abs() <= self.ci
    }
}

/// Per-sample seeds derived from the base seed.
pub fn sample_seeds(seed: u64, n_mc: usize) -> Vec<u64> {
    (0..n_mc as u64).map(|s| substream_seed(seed, TAG_SAMPLE, s)).collect()
}

/// RMS over samples and the standard error of the RMS (delta method).
fn rms_with_stderr(squares: &[f64]) -> (f64, f64) {
    let n = squares.len() as f64;
    let mean = squares.iter().copied().collect::<CompensatedSum>().value() / n;
    let var = squares.iter().map(|s| (s - mean).powi(2)).collect::<CompensatedSum>().value() / (n - 1.0).max(1.0);
    let rms = mean.sqrt();
    let se_mean = (var / n).sqrt();
    (rms, if rms > 0.0 { se_mean / (2.0 * rms) } else { 0.0 })
}

fn check_failures(failed: usize, total: usize) -> Result<()> {
    if failed as f64 > MAX_FAILURE_FRACTION * total as f64 {
        return Err(Error::Study(format!("{failed} of {total} sample runs failed (limit 1%)")));
    }
    Ok(())
}

fn diff_norm(mass: &Tridiagonal, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    mass_norm(mass, &d)
}

/// Temporal self-convergence against a coupled reference run.
///
/// `levels` are step counts, each dividing `ref_steps`; the error at each
/// level is the mass-weighted norm of `X_ref(T) - X_level(T)` with the coarse
/// noise obtained by exact aggregation of the reference noise.
pub fn temporal_study(
    spec: &ProblemSpec,
    disc: &Discretization,
    levels: &[usize],
    ref_steps: usize,
    n_mc: usize,
    seed: u64,
) -> Result<ConvergenceReport> {
    spec.validate()?;
    if levels.len() < 3 {
        return Err(Error::Study(format!("temporal study needs at least 3 levels, got {}", levels.len())));
    }
    for &m in levels {
        if m == 0 || m >= ref_steps || ref_steps % m != 0 {
            return Err(Error::Study(format!("level M = {m} must strictly divide the reference M = {ref_steps}")));
        }
    }
    if n_mc < 2 {
        return Err(Error::Study("at least 2 Monte Carlo samples are required".into()));
    }
    let noise = spec.noise_spec()?;
    let factor = FbmFactor::new(noise.hurst, spec.t_final, ref_steps)?;
    let ref_cache = build_propagators(spec, disc, ref_steps)?;
    let caches: Vec<PropagatorCache> =
        levels.iter().map(|&m| build_propagators(spec, disc, m)).collect::<Result<_>>()?;
    let seeds = sample_seeds(seed, n_mc);
    let lags: Vec<usize> = (0..6).map(|k| 1usize << k).filter(|&l| l * 4 <= ref_steps).collect();

    let per_sample: Vec<Result<(Vec<f64>, Vec<f64>)>> = seeds
        .par_iter()
        .map(|&s| {
            let path = sample_path_with(&noise, &factor, s)?;
            let reference = run_with_cache(spec, disc, &ref_cache, &path)?;
            let xr = reference.final_state();
            let mut sq = Vec::with_capacity(levels.len());
            for (&m, cache) in levels.iter().zip(&caches) {
                let coarse = aggregate(&path, ref_steps / m)?;
                let traj = run_with_cache(spec, disc, cache, &coarse)?;
                sq.push(diff_norm(&disc.mass, xr, traj.final_state()).powi(2));
            }
            // Mean squared increments of the reference run over each lag.
            let incr = lags
                .iter()
                .map(|&l| {
                    let st = &reference.states;
                    let s: CompensatedSum =
                        (0..st.len() - l).map(|j| diff_norm(&disc.mass, &st[j + l], &st[j]).powi(2)).collect();
                    s.value() / (st.len() - l) as f64
                })
                .collect();
            Ok((sq, incr))
        })
        .collect();

    let mut failed = 0;
    let mut squares = vec![Vec::with_capacity(n_mc); levels.len()];
    let mut increments = vec![CompensatedSum::new(); lags.len()];
    for r in per_sample {
        match r {
            Ok((sq, inc)) => {
                for (acc, v) in squares.iter_mut().zip(sq) {
                    acc.push(v);
                }
                for (acc, v) in increments.iter_mut().zip(inc) {
                    acc.add(v);
                }
            }
            Err(_) => failed += 1,
        }
    }
    check_failures(failed, n_mc)?;
    let (error, stderr): (Vec<f64>, Vec<f64>) = squares.iter().map(|s| rms_with_stderr(s)).unzip();
    let axis: Vec<f64> = levels.iter().map(|&m| spec.t_final / m as f64).collect();
    let fit = fit_rate(&axis, &error)?;
    let dt_ref = spec.t_final / ref_steps as f64;
    let lag_axis: Vec<f64> = lags.iter().map(|&l| l as f64 * dt_ref).collect();
    let lag_rms: Vec<f64> = increments.iter().map(|s| s.value().sqrt()).collect();
    let regularity_slope = fit_rate(&lag_axis, &lag_rms).ok().map(|f| f.slope);

    Ok(ConvergenceReport {
        kind: "temporal".into(),
        axis,
        levels: levels.to_vec(),
        reference: ref_steps,
        error,
        stderr,
        slope: fit.slope,
        ci: fit.half_width,
        theory_slope: theoretical_rates(&spec.fractional).0,
        n_mc,
        failed_runs: failed,
        seed,
        sample_seeds: seeds,
        regularity_slope,
        reduction: "sample-order compensated".into(),
        config: serde_json::Value::Null,
    })
}

/// Spatial self-convergence on nested meshes `n = 2^k - 1` with a fixed step.
///
/// The coarse P1 solution is interpolated onto the reference mesh (exact for
/// nested meshes) and the error is the reference mass-weighted norm of the
/// difference, i.e. the L2 distance of the two finite-element functions.
pub fn spatial_study(
    spec: &ProblemSpec,
    coeff: &CoefficientField,
    n_levels: &[usize],
    ref_n: usize,
    steps: usize,
    n_mc: usize,
    seed: u64,
) -> Result<ConvergenceReport> {
    spec.validate()?;
    if n_levels.len() < 3 {
        return Err(Error::Study(format!("spatial study needs at least 3 meshes, got {}", n_levels.len())));
    }
    for &n in n_levels {
        if n >= ref_n || (ref_n + 1) % (n + 1) != 0 {
            return Err(Error::Study(format!(
                "mesh n = {n} is not nested in the strictly finer reference n = {ref_n}"
            )));
        }
    }
    if n_mc < 2 {
        return Err(Error::Study("at least 2 Monte Carlo samples are required".into()));
    }
    let noise = spec.noise_spec()?;
    let factor = FbmFactor::new(noise.hurst, spec.t_final, steps)?;
    let reference = Discretization::fem(ref_n, coeff)?;
    let ref_cache = build_propagators(spec, &reference, steps)?;
    let coarse: Vec<(Discretization, PropagatorCache)> = n_levels
        .iter()
        .map(|&n| {
            let d = Discretization::fem(n, coeff)?;
            let c = build_propagators(spec, &d, steps)?;
            Ok((d, c))
        })
        .collect::<Result<_>>()?;
    let seeds = sample_seeds(seed, n_mc);

    let per_sample: Vec<Result<Vec<f64>>> = seeds
        .par_iter()
        .map(|&s| {
            let path = sample_path_with(&noise, &factor, s)?;
            let fine = run_with_cache(spec, &reference, &ref_cache, &path)?;
            let xf = fine.final_state();
            let mut sq = Vec::with_capacity(n_levels.len());
            for (d, c) in &coarse {
                let traj = run_with_cache(spec, d, c, &path)?;
                let prolonged = prolong(traj.final_state(), ref_n);
                sq.push(diff_norm(&reference.mass, xf, &prolonged).powi(2));
            }
            Ok(sq)
        })
        .collect();

    let mut failed = 0;
    let mut squares = vec![Vec::with_capacity(n_mc); n_levels.len()];
    for r in per_sample {
        match r {
            Ok(sq) => {
                for (acc, v) in squares.iter_mut().zip(sq) {
                    acc.push(v);
                }
            }
            Err(_) => failed += 1,
        }
    }
    check_failures(failed, n_mc)?;
    let (error, stderr): (Vec<f64>, Vec<f64>) = squares.iter().map(|s| rms_with_stderr(s)).unzip();
    let axis: Vec<f64> = n_levels.iter().map(|&n| 1.0 / (n + 1) as f64).collect();
    let fit = fit_rate(&axis, &error)?;
    Ok(ConvergenceReport {
        kind: "spatial".into(),
        axis,
        levels: n_levels.to_vec(),
        reference: ref_n,
        error,
        stderr,
        slope: fit.slope,
        ci: fit.half_width,
        theory_slope: theoretical_rates(&spec.fractional).1,
        n_mc,
        failed_runs: failed,
        seed,
        sample_seeds: seeds,
        regularity_slope: None,
        reduction: "sample-order compensated".into(),
        config: serde_json::Value::Null,
    })
}

/// Values at the interior nodes of the nested mesh with `fine_n` nodes of the
/// P1 function with interior nodal values `coarse` and zero boundary values.
pub fn prolong(coarse: &[f64], fine_n: usize) -> Vec<f64> {
    let ratio = (fine_n + 1) / (coarse.len() + 1);
    let at = |k: usize| if k == 0 || k > coarse.len() { 0.0 } else { coarse[k - 1] };
    (1..=fine_n)
        .map(|j| {
            let (k, r) = (j / ratio, j % ratio);
            let w = r as f64 / ratio as f64;
            (1.0 - w) * at(k) + w * at(k + 1)
        })
        .collect()
}

/// Harness sanity check: L2 distance of `P_h f` from the reference
/// projection, with no time evolution. Returns `(h, error)` pairs.
pub fn projection_errors<F: Fn(f64) -> f64 + Copy>(n_levels: &[usize], ref_n: usize, f: F) -> Result<Vec<(f64, f64)>> {
    let coeff = CoefficientField::laplacian();
    let reference = Discretization::fem(ref_n, &coeff)?;
    let fine = reference.project(f)?;
    let fine_mass = reference.mass;
    n_levels
        .iter()
        .map(|&n| {
            if n >= ref_n || (ref_n + 1) % (n + 1) != 0 {
                return Err(Error::Study(format!("mesh n = {n} is not nested in n = {ref_n}")));
            }
            let d = Discretization::fem(n, &coeff)?;
            let p = prolong(&d.project(f)?, ref_n);
            Ok((1.0 / (n + 1) as f64, diff_norm(&fine_mass, &fine, &p)))
        })
        .collect()
}

/// Smoothing profile `m(t) = max_i lambda_i^rho E_{alpha,1}(-t^alpha lambda_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub alpha: f64,
    pub rho: f64,
    pub t: Vec<f64>,
    pub m: Vec<f64>,
    /// Fitted log-log exponent of `m(t)`.
    pub exponent: f64,
    /// `max_t m(t) t^{alpha rho}`.
    pub scaled_max: f64,
}

pub fn smoothing_check(fac: &SpectralFactorization, alpha: f64, rho: f64, t_grid: &[f64]) -> Result<SmoothingReport> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidArgument(format!("smoothing exponent rho = {rho} outside [0, 1]")));
    }
    let lambdas = real_spectrum(fac)?;
    let p = MLParams::new(alpha, 1.0)?;
    let m: Vec<f64> = t_grid
        .iter()
        .map(|&t| {
            let ta = t.powf(alpha);
            lambdas.iter().try_fold(f64::NEG_INFINITY, |acc, &l| {
                Ok::<f64, Error>(acc.max(l.powf(rho) * ml_eval(p, (-ta * l).into())?.re))
            })
        })
        .collect::<Result<_>>()?;
    let exponent = fit_rate(t_grid, &m)?.slope;
    let scaled_max = t_grid.iter().zip(&m).map(|(t, v)| v * t.powf(alpha * rho)).fold(0.0, f64::max);
    Ok(SmoothingReport { alpha, rho, t: t_grid.to_vec(), m, exponent, scaled_max })
}

fn real_spectrum(fac: &SpectralFactorization) -> Result<Vec<f64>> {
    let lmax = fac.eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max);
    fac.eigenvalues()
        .iter()
        .map(|l| {
            if l.im.abs() > 1e-12 * lmax || l.re <= 0.0 {
                Err(Error::InvalidArgument(format!("real positive spectrum required, found {l}")))
            } else {
                Ok(l.re)
            }
        })
        .collect()
}

/// Largest values of `E_{alpha,1}(-t^alpha lambda_i)` and `E_{alpha,alpha}(-t^alpha lambda_i)`
/// over the spectrum and the time grid, with the bound `alpha / Gamma(1 + alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub alpha: f64,
    pub max_s1: f64,
    pub max_s2: f64,
    pub s2_bound: f64,
}

pub fn contraction_check(fac: &SpectralFactorization, alpha: f64, t_grid: &[f64]) -> Result<ContractionReport> {
    let lambdas = real_spectrum(fac)?;
    let p1 = MLParams::new(alpha, 1.0)?;
    let pa = MLParams::new(alpha, alpha)?;
    let mut max_s1 = f64::NEG_INFINITY;
    let mut max_s2 = f64::NEG_INFINITY;
    for &t in t_grid {
        let ta = t.powf(alpha);
        for &l in &lambdas {
            let z = (-ta * l).into();
            max_s1 = max_s1.max(ml_eval(p1, z)?.re);
            max_s2 = max_s2.max(ml_eval(pa, z)?.re);
        }
    }
    Ok(ContractionReport { alpha, max_s1, max_s2, s2_bound: alpha / crate::mlf::gamma::gamma(1.0 + alpha) })
}

/// A Monte Carlo estimate compared with its exact value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatCheck {
    pub estimate: f64,
    pub stderr: f64,
    pub exact: f64,
}

impl StatCheck {
    pub fn z_score(&self) -> f64 {
        if self.stderr > 0.0 {
            (self.estimate - self.exact) / self.stderr
        } else if self.estimate == self.exact {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn within(&self, k: f64) -> bool {
        self.z_score().abs() <= k
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).collect::<CompensatedSum>().value() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Statistics of sampled fBm increments against the exact covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbmReport {
    pub hurst: f64,
    pub steps: usize,
    pub n_paths: usize,
    /// Row-major `steps x steps` entries.
    pub covariance: Vec<StatCheck>,
    pub terminal_variance: StatCheck,
    /// Sample correlation of simultaneous Wiener and fBm increments against zero.
    pub cross: Vec<StatCheck>,
}

impl FbmReport {
    pub fn worst_covariance_z(&self) -> f64 {
        self.covariance.iter().map(|c| c.z_score().abs()).fold(0.0, f64::max)
    }

    pub fn worst_cross_z(&self) -> f64 {
        self.cross.iter().map(|c| c.z_score().abs()).fold(0.0, f64::max)
    }
}

/// Sample the first noise mode `n_paths` times and compare the empirical
/// increment covariance with the exact one.
pub fn fbm_check(hurst: f64, t_final: f64, steps: usize, n_paths: usize, seed: u64) -> Result<FbmReport> {
    let spec = NoiseSpec::new(1, 2.0, hurst)?;
    let factor = FbmFactor::new(hurst, t_final, steps)?;
    let exact = fbm_increment_covariance(hurst, t_final, steps)?;
    let paths: Vec<(Vec<f64>, Vec<f64>)> = sample_seeds(seed, n_paths)
        .into_par_iter()
        .map(|s| sample_path_with(&spec, &factor, s).map(|p| (p.fbm[0].clone(), p.wiener[0].clone())))
        .collect::<Result<_>>()?;
    let mut covariance = Vec::with_capacity(steps * steps);
    for i in 0..steps {
        for j in 0..steps {
            let prods: Vec<f64> = paths.iter().map(|(b, _)| b[i] * b[j]).collect();
            let (estimate, stderr) = mean_and_stderr(&prods);
            covariance.push(StatCheck { estimate, stderr, exact: exact[(i, j)] });
        }
    }
    let squares: Vec<f64> = paths
        .iter()
        .map(|(b, _)| b.iter().copied().collect::<CompensatedSum>().value().powi(2))
        .collect();
    let (estimate, stderr) = mean_and_stderr(&squares);
    let terminal_variance = StatCheck { estimate, stderr, exact: t_final.powf(2.0 * hurst) };
    let cross = (0..steps)
        .map(|j| {
            let prods: Vec<f64> = paths.iter().map(|(b, w)| b[j] * w[j]).collect();
            let (estimate, stderr) = mean_and_stderr(&prods);
            StatCheck { estimate, stderr, exact: 0.0 }
        })
        .collect();
    Ok(FbmReport { hurst, steps, n_paths, covariance, terminal_variance, cross })
}

/// Ito isometry for the deterministic step integrand `theta_j e_i = a_j c_i e_i`:
/// `E || sum_j theta_j dW_j ||^2 = sum_j ||theta_j||^2_{L_2^0} dt`
/// with `||theta_j||^2_{L_2^0} = a_j^2 sum_i q_i c_i^2`.
pub fn ito_isometry_check(noise: &NoiseSpec, t_final: f64, steps: usize, n_samples: usize, seed: u64) -> Result<StatCheck> {
    let factor = FbmFactor::new(noise.hurst, t_final, steps)?;
    let dt = t_final / steps as f64;
    let a: Vec<f64> = (0..steps).map(|j| 1.0 + (j as f64 * dt * 3.0).sin()).collect();
    let c: Vec<f64> = (1..=noise.n_modes).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let q: Vec<f64> = noise.sqrt_q().iter().map(|s| s * s).collect();
    let hs: f64 = q.iter().zip(&c).map(|(q, c)| q * c * c).sum();
    let exact: f64 = a.iter().map(|a| a * a * hs * dt).sum();
    let values: Vec<f64> = sample_seeds(seed, n_samples)
        .into_par_iter()
        .map(|s| {
            let p = sample_path_with(noise, &factor, s)?;
            // Coordinates in the orthonormal basis e_i.
            Ok((0..noise.n_modes)
                .map(|i| {
                    let coord: f64 = (0..steps).map(|j| a[j] * c[i] * q[i].sqrt() * p.wiener[i][j]).sum();
                    coord * coord
                })
                .sum())
        })
        .collect::<Result<_>>()?;
    let (estimate, stderr) = mean_and_stderr(&values);
    Ok(StatCheck { estimate, stderr, exact })
}

/// Ratio of the sampled `E || sum_j Phi dB_j ||^2` (constant `Phi = phi I`)
/// to `(sum_i (int_0^T ||Phi Q^{1/2} e_i||^{1/H} dt)^{2H})`. The ratio is the
/// empirical constant of the fBm estimate; it is finite and stable in `M`.
pub fn fbm_bound_ratio(noise: &NoiseSpec, t_final: f64, steps: usize, n_samples: usize, seed: u64) -> Result<f64> {
    let factor = FbmFactor::new(noise.hurst, t_final, steps)?;
    let q: Vec<f64> = noise.sqrt_q().iter().map(|s| s * s).collect();
    let h = noise.hurst;
    let bound: f64 = q.iter().map(|qi| (t_final * qi.powf(0.5 / h)).powf(2.0 * h)).sum();
    let values: Vec<f64> = sample_seeds(seed, n_samples)
        .into_par_iter()
        .map(|s| {
            let p = sample_path_with(noise, &factor, s)?;
            Ok((0..noise.n_modes)
                .map(|i| q[i] * p.fbm[i].iter().copied().collect::<CompensatedSum>().value().powi(2))
                .sum())
        })
        .collect::<Result<_>>()?;
    let (mean, _) = mean_and_stderr(&values);
    Ok(mean / bound)
}

/// Which independent reference produced a validation value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    ClosedForm,
    Series,
    Quadrature,
    Asymptotic,
}

/// Independent reference for `E_{alpha,beta}(-x)`, `x > 0`.
///
/// Closed forms for `(1,1)`, `(2,1)`, `(2,2)`; otherwise the power series when
/// its rounding bound is below 1e-12, then the real-line integral for
/// `alpha < 1`, and finally a 20-term asymptotic sum.
pub fn ml_reference(params: MLParams, x: f64) -> Result<(f64, OracleKind)> {
    use crate::mlf::oracle::{ml_asymptotic_oracle, ml_quadrature_oracle, ml_series_oracle_estimate, SERIES_TERM_CAP};
    let MLParams { alpha, beta } = params;
    if alpha == 1.0 && beta == 1.0 {
        return Ok(((-x).exp(), OracleKind::ClosedForm));
    }
    if alpha == 2.0 && beta == 1.0 {
        return Ok((x.sqrt().cos(), OracleKind::ClosedForm));
    }
    if alpha == 2.0 && beta == 2.0 {
        return Ok((x.sqrt().sin() / x.sqrt(), OracleKind::ClosedForm));
    }
    if let Ok(est) = ml_series_oracle_estimate(params, (-x).into(), 1e-16, SERIES_TERM_CAP) {
        if est.relative_bound() <= 1e-12 {
            return Ok((est.value.re, OracleKind::Series));
        }
    }
    if alpha < 1.0 && beta < 1.0 + alpha {
        return Ok((ml_quadrature_oracle(params, x)?, OracleKind::Quadrature));
    }
    Ok((ml_asymptotic_oracle(params, (-x).into(), 20).re, OracleKind::Asymptotic))
}

/// One row of the Mittag-Leffler validation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlCheckRow {
    pub alpha: f64,
    pub beta: f64,
    pub x: f64,
    pub value: f64,
    pub reference: f64,
    pub oracle: OracleKind,
    pub rel_error: f64,
    /// `|E_{a,b}(z) - z E_{a,a+b}(z) - 1/Gamma(b)|` over the largest of the three terms.
    pub recurrence_error: f64,
}

/// Relative tolerance of the validation grid.
pub const ML_TOLERANCE: f64 = 1e-10;

impl MlCheckRow {
    pub fn pass(&self) -> bool {
        self.rel_error <= ML_TOLERANCE && self.recurrence_error <= ML_TOLERANCE
    }
}

/// `alpha in {0.55, 0.6, 0.75, 0.9, 1, 2}`, `beta in {alpha, 1}`, `z = -x` with
/// `x` on 60 logarithmically spaced points of `[1e-3, 1e3]`.
pub fn ml_validation_grid() -> Result<Vec<MlCheckRow>> {
    use crate::mlf::gamma::rgamma;
    let xs = crate::numeric::logspace(1e-3, 1e3, 60);
    let mut rows = vec![];
    for &alpha in &[0.55, 0.6, 0.75, 0.9, 1.0, 2.0] {
        let mut betas = vec![alpha, 1.0];
        betas.dedup();
        for &beta in &betas {
            let p = MLParams::new(alpha, beta)?;
            let shifted = MLParams::new(alpha, alpha + beta)?;
            for &x in &xs {
                let z: num_complex::Complex64 = (-x).into();
                let value = ml_eval(p, z)?.re;
                let (reference, oracle) = ml_reference(p, x)?;
                let diff = (value - reference).abs();
                // exp(-x) underflows to zero near the end of the grid.
                let rel_error = if reference == 0.0 { diff } else { diff / reference.abs() };
                let ze = -x * ml_eval(shifted, z)?.re;
                let g = rgamma(beta);
                let scale = value.abs().max(ze.abs()).max(g.abs());
                let recurrence_error = (value - ze - g).abs() / scale;
                rows.push(MlCheckRow { alpha, beta, x, value, reference, oracle, rel_error, recurrence_error });
            }
        }
    }
    Ok(rows)
}

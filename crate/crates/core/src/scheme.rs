//! The fractional exponential integrator
//!
//! `X_m = S1(t_m) P X_0 + dt sum_{j<m} (t_m - t_j)^(alpha-1) S2(t_m - t_j) P F(X_j)
//!        + sum_{j<m} S1(t_m - t_j) P [G(X_j) dW_j + Phi dB_j]`
//!
//! evaluated in the eigenbasis of the finite-element pencil.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::catalog::{Additive, Diffusion, Drift, Initial};
use crate::error::{Error, Result};
use crate::fem::{
    assemble, build_mesh, l2_project, real_part, spectral_factorize, CoefficientField, Mesh1D, OperatorAssembly,
    SpectralFactorization, Tridiagonal,
};
use crate::mlf::gamma::gamma;
use crate::mlf::PropagatorCache;
use crate::noise::{basis, NoisePath, NoiseSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalParams {
    pub alpha: f64,
    pub hurst: f64,
    pub beta: f64,
}

impl FractionalParams {
    pub fn new(alpha: f64, hurst: f64, beta: f64) -> Result<Self> {
        let p = Self { alpha, hurst, beta };
        let problems = p.violations();
        if problems.is_empty() {
            Ok(p)
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }

    /// Every violated range constraint, as messages.
    pub fn violations(&self) -> Vec<String> {
        let mut out = vec![];
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            out.push(format!("alpha = {} must lie in (1/2, 1) (Caputo order)", self.alpha));
        }
        if !(self.hurst > 0.5 && self.hurst < 1.0) {
            out.push(format!("hurst = {} must lie in (1/2, 1)", self.hurst));
        }
        let lo = 1.0 - 2.0 * self.hurst;
        if !(self.beta > lo && self.beta <= 1.0) {
            out.push(format!(
                "beta = {} must lie in (1 - 2H, 1] = ({lo}, 1] (initial-value and additive-noise regularity)",
                self.beta
            ));
        }
        out
    }
}

/// The stochastic problem on (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub fractional: FractionalParams,
    pub t_final: f64,
    pub drift: Drift,
    pub diffusion: Diffusion,
    pub additive: Additive,
    pub initial: Initial,
    /// Declared Lipschitz constant of `f` and `g`.
    pub lipschitz_l: f64,
    /// Shift added to the operator; the drift is compensated by `+ c0 u`.
    pub c0: f64,
    pub n_modes: usize,
    pub decay: f64,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = self.fractional.violations();
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            problems.push(format!("T = {} must be positive", self.t_final));
        }
        if !(self.lipschitz_l >= 0.0) {
            problems.push(format!("lipschitz_L = {} must be non-negative", self.lipschitz_l));
        }
        if let Err(e) = self.noise_spec_unchecked().validate() {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }

    fn noise_spec_unchecked(&self) -> NoiseSpec {
        NoiseSpec { n_modes: self.n_modes, decay: self.decay, hurst: self.fractional.hurst }
    }

    pub fn noise_spec(&self) -> Result<NoiseSpec> {
        let s = self.noise_spec_unchecked();
        s.validate()?;
        Ok(s)
    }

    /// `max(Lip_f^2, 2 Tr(Q) Lip_g^2)`, a Lipschitz constant for the pair `(F, G)`
    /// in the squared form used by the well-posedness diagnostic.
    pub fn catalog_lipschitz(&self) -> f64 {
        let tr = self.noise_spec_unchecked().trace();
        let lf = self.drift.lipschitz();
        let lg = self.diffusion.lipschitz();
        (lf * lf).max(2.0 * tr * lg * lg)
    }

    /// Effective drift including the shift compensation.
    pub fn drift_eval(&self, x: f64, u: f64) -> f64 {
        self.drift.eval(x, u) + self.c0 * u
    }
}

/// Value of the contraction constant and whether it stays below one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellPosedness {
    pub value: f64,
    pub pass: bool,
}

/// `2 L [T^{2 alpha - 1} / (2 alpha - 1) (alpha Gamma(2) / Gamma(1 + alpha))^2 + 1]`.
pub fn wellposedness_check(spec: &ProblemSpec) -> WellPosedness {
    let a = spec.fractional.alpha;
    let bound = a / gamma(1.0 + a);
    let value = 2.0 * spec.lipschitz_l * (spec.t_final.powf(2.0 * a - 1.0) / (2.0 * a - 1.0) * bound * bound + 1.0);
    WellPosedness { value, pass: value < 1.0 }
}

/// Spatial discretization: nodes, mass matrix and spectral factorization.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub nodes: Vec<f64>,
    pub mass: Tridiagonal,
    pub fac: SpectralFactorization,
    fem: Option<(Mesh1D, OperatorAssembly)>,
}

impl Discretization {
    /// P1 discretization on `n` interior nodes.
    pub fn fem(n: usize, coeff: &CoefficientField) -> Result<Self> {
        let mesh = build_mesh(n)?;
        let assembly = assemble(&mesh, coeff)?;
        let fac = spectral_factorize(&assembly)?;
        Ok(Self { nodes: mesh.nodes().to_vec(), mass: assembly.mass.clone(), fac, fem: Some((mesh, assembly)) })
    }

    /// One-dimensional problem `u' = -lambda u` observed at a single point `node`.
    pub fn scalar(lambda: f64, node: f64) -> Result<Self> {
        let one = nalgebra::DMatrix::from_element(1, 1, 1.0);
        let s = nalgebra::DMatrix::from_element(1, 1, lambda);
        let fac = SpectralFactorization::from_dense(&s, &one)?;
        Ok(Self { nodes: vec![node], mass: Tridiagonal::diagonal(&[1.0]), fac, fem: None })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn mesh(&self) -> Option<&Mesh1D> {
        self.fem.as_ref().map(|(m, _)| m)
    }

    pub fn assembly(&self) -> Option<&OperatorAssembly> {
        self.fem.as_ref().map(|(_, a)| a)
    }

    /// `P_h f`: L2 projection for finite elements, point value for the scalar case.
    pub fn project<F: Fn(f64) -> f64>(&self, f: F) -> Result<Vec<f64>> {
        match &self.fem {
            Some((mesh, asm)) => l2_project(mesh, asm, f),
            None => Ok(self.nodes.iter().map(|&x| f(x)).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub n: usize,
    pub steps: usize,
    pub t_final: f64,
    pub alpha: f64,
    pub hurst: f64,
    pub beta: f64,
}

/// Nodal history `X_0 .. X_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub nodes: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub seed: u64,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

/// Propagator cache matching `spec` and `steps`.
pub fn build_propagators(spec: &ProblemSpec, disc: &Discretization, steps: usize) -> Result<PropagatorCache> {
    PropagatorCache::build(&disc.fac, spec.fractional.alpha, spec.t_final / steps as f64, steps)
}

/// Run the scheme on the grid of `path`, building the propagators on the fly.
pub fn run(spec: &ProblemSpec, disc: &Discretization, path: &NoisePath) -> Result<Trajectory> {
    let cache = build_propagators(spec, disc, path.steps)?;
    run_with_cache(spec, disc, &cache, path)
}

pub fn run_with_cache(
    spec: &ProblemSpec,
    disc: &Discretization,
    cache: &PropagatorCache,
    path: &NoisePath,
) -> Result<Trajectory> {
    run_core(spec, disc, cache, path, |_, x, u| spec.drift_eval(x, u))
}

/// The recursion with a step-dependent drift `drift(j, x, u)`.
pub(crate) fn run_core<D>(
    spec: &ProblemSpec,
    disc: &Discretization,
    cache: &PropagatorCache,
    path: &NoisePath,
    drift: D,
) -> Result<Trajectory>
where
    D: Fn(usize, f64, f64) -> f64,
{
    spec.validate()?;
    let steps = path.steps;
    let dt = spec.t_final / steps as f64;
    if cache.steps() != steps || (cache.dt - dt).abs() > 1e-12 * dt || cache.alpha != spec.fractional.alpha {
        return Err(Error::Scheme(format!(
            "propagator cache (M = {}, dt = {}) does not match the path grid (M = {steps}, dt = {dt})",
            cache.steps(),
            cache.dt
        )));
    }
    if (path.t_final - spec.t_final).abs() > 1e-12 * spec.t_final {
        return Err(Error::Scheme(format!("noise path horizon {} differs from T = {}", path.t_final, spec.t_final)));
    }
    if path.n_modes() != spec.n_modes {
        return Err(Error::Scheme(format!("noise path has {} modes, problem expects {}", path.n_modes(), spec.n_modes)));
    }
    let n = disc.n();
    let nodes = &disc.nodes;
    let noise = spec.noise_spec()?;
    let sqrt_q = noise.sqrt_q();
    // sqrt(q_i) e_i(x_k), mode-major
    let modes: Vec<Vec<f64>> = (0..noise.n_modes)
        .map(|i| nodes.iter().map(|&x| sqrt_q[i] * basis(i + 1, x)).collect())
        .collect();
    let phi: Vec<f64> = nodes.iter().map(|&x| spec.additive.eval(x)).collect();

    let x0 = disc.project(|x| spec.initial.eval(x))?;
    let c0 = disc.fac.coordinates(&x0)?;

    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0);
    // Eigen-coordinates of the deterministic and stochastic loads of every past step.
    let mut f_hat: Vec<Complex64> = Vec::with_capacity(steps * n);
    let mut g_hat: Vec<Complex64> = Vec::with_capacity(steps * n);
    let mut load = vec![0.0; n];
    let mut acc = DVector::<Complex64>::zeros(n);

    for m in 1..=steps {
        // Loads from the newest state X_{m-1}.
        let j = m - 1;
        let xj = &states[j];
        for k in 0..n {
            load[k] = drift(j, nodes[k], xj[k]);
        }
        f_hat.extend(disc.fac.coordinates(&load)?.iter());
        for k in 0..n {
            let g = spec.diffusion.eval(nodes[k], xj[k]);
            let mut s = 0.0;
            for (i, mode) in modes.iter().enumerate() {
                s += mode[k] * (g * path.wiener[i][j] + phi[k] * path.fbm[i][j]);
            }
            load[k] = s;
        }
        g_hat.extend(disc.fac.coordinates(&load)?.iter());

        let s1_m = &cache.s1_values[m - 1];
        for i in 0..n {
            acc[i] = s1_m[i] * c0[i];
        }
        for j in 0..m {
            let lag = m - j - 1;
            let s1 = &cache.s1_values[lag];
            let s2 = &cache.s2_weighted[lag];
            let fj = &f_hat[j * n..(j + 1) * n];
            let gj = &g_hat[j * n..(j + 1) * n];
            for i in 0..n {
                acc[i] += s2[i] * fj[i] * dt + s1[i] * gj[i];
            }
        }
        let xm = real_part(&disc.fac.synthesize(&acc))?;
        if xm.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: m });
        }
        states.push(xm);
    }

    Ok(Trajectory {
        grid: path.grid(),
        nodes: nodes.clone(),
        states,
        seed: path.seed,
        meta: TrajectoryMeta {
            n,
            steps,
            t_final: spec.t_final,
            alpha: spec.fractional.alpha,
            hurst: spec.fractional.hurst,
            beta: spec.fractional.beta,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mass_norm;
    use crate::mlf::{ml_matrix_action, MLParams};
    use crate::noise::sample_path;

    fn base_spec() -> ProblemSpec {
        ProblemSpec {
            fractional: FractionalParams::new(0.75, 0.75, 1.0).unwrap(),
            t_final: 1.0,
            drift: Drift::Zero,
            diffusion: Diffusion::Zero,
            additive: Additive::Zero,
            initial: Initial::Sine { k: 1, a: 1.0 },
            lipschitz_l: 0.0,
            c0: 0.0,
            n_modes: 8,
            decay: 3.0,
        }
    }

    #[test]
    fn wellposedness_examples() {
        let mut s = base_spec();
        let w = wellposedness_check(&s);
        assert_eq!(w.value, 0.0);
        assert!(w.pass);
        s.lipschitz_l = 0.01;
        let w = wellposedness_check(&s);
        let b = 0.75 / 0.919_062_526_848_883_2;
        let expected = 0.02 * (2.0 * b * b + 1.0);
        assert!((w.value - expected).abs() < 1e-14);
        assert!((w.value - 0.0466).abs() < 1e-4 && w.pass);
        s.lipschitz_l = 10.0;
        assert!(!wellposedness_check(&s).pass);
    }

    #[test]
    fn parameter_ranges() {
        assert!(FractionalParams::new(0.4, 0.75, 1.0).is_err());
        assert!(FractionalParams::new(0.75, 0.75, -0.6).is_err());
        assert!(FractionalParams::new(0.75, 0.75, -0.4).is_ok());
        let v = FractionalParams { alpha: 0.3, hurst: 1.2, beta: 2.0 }.violations();
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn free_evolution_matches_matrix_action() {
        let spec = base_spec();
        let disc = Discretization::fem(15, &CoefficientField::laplacian()).unwrap();
        let path = sample_path(&spec.noise_spec().unwrap(), 1.0, 16, 1).unwrap();
        let traj = run(&spec, &disc, &path).unwrap();
        let x0 = &traj.states[0];
        let p = MLParams::new(0.75, 1.0).unwrap();
        for m in 1..=16 {
            let t = m as f64 / 16.0;
            let direct = ml_matrix_action(p, t.powf(0.75), &disc.fac, x0).unwrap();
            let norm = direct.iter().map(|v| v * v).sum::<f64>().sqrt();
            let diff = direct.iter().zip(&traj.states[m]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(diff <= 1e-12 * norm, "step {m}: {diff} vs {norm}");
        }
        // Mass-weighted norm decays monotonically.
        let norms: Vec<f64> = traj.states.iter().map(|s| mass_norm(&disc.mass, s)).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
    }

    #[test]
    fn history_dependence() {
        let mut spec = base_spec();
        spec.drift = Drift::Sine { c: 0.5 };
        let disc = Discretization::fem(7, &CoefficientField::laplacian()).unwrap();
        let path = sample_path(&spec.noise_spec().unwrap(), 1.0, 12, 3).unwrap();
        let cache = build_propagators(&spec, &disc, 12).unwrap();
        let base = run_core(&spec, &disc, &cache, &path, |_, x, u| spec.drift_eval(x, u)).unwrap();
        let bumped = run_core(&spec, &disc, &cache, &path, |j, x, u| {
            spec.drift_eval(x, u) + if j == 4 { 1.0 } else { 0.0 }
        })
        .unwrap();
        for m in 0..=4 {
            assert_eq!(base.states[m], bumped.states[m]);
        }
        for m in 5..=12 {
            assert_ne!(base.states[m], bumped.states[m], "step {m}");
        }
    }

    #[test]
    fn rejects_mismatched_grid() {
        let spec = base_spec();
        let disc = Discretization::fem(7, &CoefficientField::laplacian()).unwrap();
        let path = sample_path(&spec.noise_spec().unwrap(), 1.0, 8, 3).unwrap();
        let cache = build_propagators(&spec, &disc, 16).unwrap();
        assert!(run_with_cache(&spec, &disc, &cache, &path).is_err());
    }
}

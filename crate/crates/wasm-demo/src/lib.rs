//! Browser bindings: Mittag-Leffler curves, fBm paths and a small simulation.
//!
//! The plain functions are usable from Rust; the `#[wasm_bindgen]` wrappers
//! convert errors into JavaScript exceptions.

use fracexp::catalog::{Additive, Diffusion, Drift, Initial};
use fracexp::fem::CoefficientField;
use fracexp::mlf::{ml_eval, MLParams};
use fracexp::noise::{sample_path, NoiseSpec};
use fracexp::numeric::CompensatedSum;
use fracexp::scheme::{run, Discretization, FractionalParams, ProblemSpec};
use wasm_bindgen::prelude::*;

/// `E_{alpha,beta}(-x)` at `points` equally spaced `x` in `[0, x_max]`.
pub fn ml_curve_values(alpha: f64, beta: f64, x_max: f64, points: usize) -> fracexp::Result<Vec<f64>> {
    let p = MLParams::new(alpha, beta)?;
    if points < 2 || !(x_max > 0.0) {
        return Err(fracexp::Error::InvalidArgument("need x_max > 0 and at least 2 points".into()));
    }
    (0..points)
        .map(|k| {
            let x = x_max * k as f64 / (points - 1) as f64;
            Ok(ml_eval(p, (-x).into())?.re)
        })
        .collect()
}

/// fBm on `[0, 1]` at `steps + 1` grid points, starting at 0.
pub fn fbm_path_values(hurst: f64, steps: usize, seed: u64) -> fracexp::Result<Vec<f64>> {
    let spec = NoiseSpec::new(1, 2.0, hurst)?;
    let path = sample_path(&spec, 1.0, steps, seed)?;
    let mut acc = CompensatedSum::default();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(0.0);
    for &db in &path.fbm[0] {
        acc.add(db);
        out.push(acc.value());
    }
    Ok(out)
}

/// Trajectory on `n` interior nodes and `steps` steps, flattened row by row
/// as `(steps + 1) x (n + 2)` values including the zero boundary values.
///
/// Drift `-0.5 sin u`, multiplicative `g_c sin(pi x) cos u`, additive
/// `phi_c sin(pi x)`, initial value `sin(pi x)`, 16 noise modes with `r = 2`.
pub fn simulate_profile_values(
    alpha: f64,
    hurst: f64,
    n: usize,
    steps: usize,
    g_c: f64,
    phi_c: f64,
    seed: u64,
) -> fracexp::Result<Vec<f64>> {
    let mut spec = ProblemSpec {
        fractional: FractionalParams::new(alpha, hurst, 1.0)?,
        t_final: 1.0,
        drift: Drift::Sine { c: -0.5 },
        diffusion: Diffusion::SinProfile { c: g_c },
        additive: Additive::SinProfile { c: phi_c },
        initial: Initial::Sine { k: 1, a: 1.0 },
        lipschitz_l: 0.0,
        c0: 0.0,
        n_modes: 16,
        decay: 2.0,
    };
    spec.lipschitz_l = spec.catalog_lipschitz();
    let disc = Discretization::fem(n, &CoefficientField::laplacian())?;
    let path = sample_path(&spec.noise_spec()?, 1.0, steps, seed)?;
    let traj = run(&spec, &disc, &path)?;
    let mut out = Vec::with_capacity((steps + 1) * (n + 2));
    for state in &traj.states {
        out.push(0.0);
        out.extend_from_slice(state);
        out.push(0.0);
    }
    Ok(out)
}

fn js(e: fracexp::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn ml_curve(alpha: f64, beta: f64, x_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    ml_curve_values(alpha, beta, x_max, points).map_err(js)
}

#[wasm_bindgen]
pub fn fbm_path(hurst: f64, steps: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    fbm_path_values(hurst, steps, seed as u64).map_err(js)
}

#[wasm_bindgen]
pub fn simulate_profile(
    alpha: f64,
    hurst: f64,
    n: usize,
    steps: usize,
    g_c: f64,
    phi_c: f64,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    simulate_profile_values(alpha, hurst, n, steps, g_c, phi_c, seed as u64).map_err(js)
}

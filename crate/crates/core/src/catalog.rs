//! Named coefficient functions selectable from configuration files.
//!
//! Each entry documents its Lipschitz constant in `u`, which feeds the
//! default well-posedness diagnostic.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Drift `f(x, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Drift {
    Zero,
    /// `c u`, Lipschitz `|c|`.
    Linear { c: f64 },
    /// `c sin(u)`, Lipschitz `|c|`.
    Sine { c: f64 },
}

impl Drift {
    pub fn eval(&self, _x: f64, u: f64) -> f64 {
        match *self {
            Drift::Zero => 0.0,
            Drift::Linear { c } => c * u,
            Drift::Sine { c } => c * u.sin(),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            Drift::Zero => 0.0,
            Drift::Linear { c } | Drift::Sine { c } => c.abs(),
        }
    }
}

/// Multiplicative noise coefficient `g(x, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Diffusion {
    Zero,
    /// `c`, Lipschitz 0.
    Constant { c: f64 },
    /// `c u`, Lipschitz `|c|`.
    Linear { c: f64 },
    /// `c sin(pi x) cos(u)`, bounded and smooth, Lipschitz `|c|`.
    SinProfile { c: f64 },
}

impl Diffusion {
    pub fn eval(&self, x: f64, u: f64) -> f64 {
        match *self {
            Diffusion::Zero => 0.0,
            Diffusion::Constant { c } => c,
            Diffusion::Linear { c } => c * u,
            Diffusion::SinProfile { c } => c * (PI * x).sin() * u.cos(),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            Diffusion::Zero | Diffusion::Constant { .. } => 0.0,
            Diffusion::Linear { c } | Diffusion::SinProfile { c } => c.abs(),
        }
    }
}

/// Additive noise coefficient `phi(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Additive {
    Zero,
    /// `c sin(pi x)`.
    SinProfile { c: f64 },
    /// `16 c x^2 (1 - x)^2`, peak `c` at the midpoint.
    Bump { c: f64 },
}

impl Additive {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Additive::Zero => 0.0,
            Additive::SinProfile { c } => c * (PI * x).sin(),
            Additive::Bump { c } => 16.0 * c * x * x * (1.0 - x) * (1.0 - x),
        }
    }
}

/// Initial condition `X_0(x)`.
///
/// All entries vanish at both ends. `Tent` has a kink at the midpoint and is
/// only in `H^{3/2 - eps}`, so it is rougher than the smooth entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Zero,
    /// `a sin(k pi x)`.
    Sine { k: u32, a: f64 },
    /// `4 a x (1 - x)`.
    Parabola { a: f64 },
    /// `a (1 - |2x - 1|)`.
    Tent { a: f64 },
}

impl Initial {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Initial::Zero => 0.0,
            Initial::Sine { k, a } => a * (k as f64 * PI * x).sin(),
            Initial::Parabola { a } => 4.0 * a * x * (1.0 - x),
            Initial::Tent { a } => a * (1.0 - (2.0 * x - 1.0).abs()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values_vanish() {
        let inits = [
            Initial::Sine { k: 3, a: 2.0 },
            Initial::Parabola { a: 1.0 },
            Initial::Tent { a: 1.0 },
        ];
        for init in inits {
            assert!(init.eval(0.0).abs() < 1e-15);
            assert!(init.eval(1.0).abs() < 1e-15);
        }
        assert_eq!(Initial::Parabola { a: 1.0 }.eval(0.5), 1.0);
        assert_eq!(Additive::Bump { c: 2.0 }.eval(0.5), 2.0);
        assert!(Additive::SinProfile { c: 1.0 }.eval(1.0).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_constants_bound_difference_quotients() {
        let g = Diffusion::SinProfile { c: 0.3 };
        let f = Drift::Sine { c: -0.7 };
        let pts = [-3.0, -0.4, 0.0, 0.2, 1.5, 4.0];
        for &x in &[0.1, 0.5, 0.9] {
            for &a in &pts {
                for &b in &pts {
                    if a != b {
                        assert!((g.eval(x, a) - g.eval(x, b)).abs() <= g.lipschitz() * (a - b).abs() + 1e-15);
                        assert!((f.eval(x, a) - f.eval(x, b)).abs() <= f.lipschitz() * (a - b).abs() + 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn serde_round_trip() {
        let g = Diffusion::SinProfile { c: 0.5 };
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"kind":"sin_profile","c":0.5}"#);
        assert_eq!(serde_json::from_str::<Diffusion>(&s).unwrap(), g);
    }
}

use fracexp::catalog::{Additive, Diffusion, Drift, Initial};
use fracexp::experiments::fit_rate;
use fracexp::fem::{mass_norm, CoefficientField};
use fracexp::mlf::gamma::rgamma;
use fracexp::mlf::{ml_eval, MLParams};
use fracexp::noise::{aggregate, sample_path, NoisePath, NoiseSpec};
use fracexp::numeric::CompensatedSum;
use fracexp::scheme::{run, Discretization, FractionalParams, ProblemSpec};
use proptest::prelude::*;

fn additive_only(phi: f64) -> ProblemSpec {
    ProblemSpec {
        fractional: FractionalParams { alpha: 0.7, hurst: 0.8, beta: 1.0 },
        t_final: 1.0,
        drift: Drift::Zero,
        diffusion: Diffusion::Zero,
        additive: Additive::Bump { c: phi },
        initial: Initial::Parabola { a: 1.0 },
        lipschitz_l: 0.0,
        c0: 0.0,
        n_modes: 5,
        decay: 2.0,
    }
}

fn combine(a: &NoisePath, b: &NoisePath, s: f64) -> NoisePath {
    let mix = |x: &[Vec<f64>], y: &[Vec<f64>]| -> Vec<Vec<f64>> {
        x.iter().zip(y).map(|(u, v)| u.iter().zip(v).map(|(p, q)| s * p + q).collect()).collect()
    };
    NoisePath { t_final: a.t_final, steps: a.steps, wiener: mix(&a.wiener, &b.wiener), fbm: mix(&a.fbm, &b.fbm), seed: 0 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn recurrence_holds(alpha in 0.5f64..1.0, beta in 0.3f64..1.5, x in 0.0f64..40.0) {
        let p = MLParams::new(alpha, beta).unwrap();
        let q = MLParams::new(alpha, alpha + beta).unwrap();
        let z: num_complex::Complex64 = (-x).into();
        let lhs = ml_eval(p, z).unwrap().re;
        let ze = -x * ml_eval(q, z).unwrap().re;
        let g = rgamma(beta);
        let scale = lhs.abs().max(ze.abs()).max(g.abs());
        prop_assert!((lhs - ze - g).abs() <= 1e-10 * scale);
    }

    #[test]
    fn relaxation_is_monotone(alpha in 0.5f64..1.0, x in 0.0f64..200.0, dx in 1e-3f64..5.0) {
        // E_{alpha,1}(-x) is completely monotone for alpha <= 1.
        let p = MLParams::new(alpha, 1.0).unwrap();
        let a = ml_eval(p, (-x).into()).unwrap().re;
        let b = ml_eval(p, (-(x + dx)).into()).unwrap().re;
        prop_assert!(b <= a + 1e-15);
        prop_assert!(b > 0.0 && a <= 1.0);
    }

    #[test]
    fn additive_channel_is_affine(s in -3.0f64..3.0, seed in 0u64..1000) {
        let spec = additive_only(0.5);
        let disc = Discretization::fem(7, &CoefficientField::laplacian()).unwrap();
        let noise = spec.noise_spec().unwrap();
        let p1 = sample_path(&noise, 1.0, 8, seed).unwrap();
        let p2 = sample_path(&noise, 1.0, 8, seed + 1).unwrap();
        let zero = NoisePath { wiener: vec![vec![0.0; 8]; 5], fbm: vec![vec![0.0; 8]; 5], ..p1.clone() };
        let mixed = combine(&p1, &p2, s);
        let x0 = run(&spec, &disc, &zero).unwrap();
        let x1 = run(&spec, &disc, &p1).unwrap();
        let x2 = run(&spec, &disc, &p2).unwrap();
        let xm = run(&spec, &disc, &mixed).unwrap();
        for m in 0..=8 {
            for k in 0..7 {
                let want = s * (x1.states[m][k] - x0.states[m][k]) + x2.states[m][k];
                prop_assert!((xm.states[m][k] - want).abs() <= 1e-12 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn free_evolution_decays_in_mass_norm(alpha in 0.55f64..0.95, d in 0.1f64..5.0) {
        let mut spec = additive_only(0.0);
        spec.fractional.alpha = alpha;
        spec.additive = Additive::Zero;
        spec.initial = Initial::Tent { a: 1.0 };
        let disc = Discretization::fem(9, &CoefficientField::constant(d, 0.0, 0.0)).unwrap();
        let path = sample_path(&spec.noise_spec().unwrap(), 1.0, 12, 1).unwrap();
        let t = run(&spec, &disc, &path).unwrap();
        let norms: Vec<f64> = t.states.iter().map(|s| mass_norm(&disc.mass, s)).collect();
        for w in norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn aggregation_preserves_totals(seed in 0u64..500, f in prop::sample::select(vec![1usize, 2, 4, 8, 16])) {
        let noise = NoiseSpec::new(3, 2.0, 0.65).unwrap();
        let p = sample_path(&noise, 2.0, 16, seed).unwrap();
        let c = aggregate(&p, f).unwrap();
        prop_assert_eq!(c.steps, 16 / f);
        for i in 0..3 {
            let fine: CompensatedSum = p.wiener[i].iter().copied().collect();
            let coarse: CompensatedSum = c.wiener[i].iter().copied().collect();
            prop_assert!((fine.value() - coarse.value()).abs() <= 1e-14 * (1.0 + fine.value().abs()));
        }
    }

    #[test]
    fn fit_recovers_exact_power_laws(slope in -1.0f64..3.0, c in 0.01f64..100.0) {
        let h = [0.5, 0.25, 0.125, 0.0625];
        let e: Vec<f64> = h.iter().map(|x: &f64| c * x.powf(slope)).collect();
        let fit = fit_rate(&h, &e).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-10);
        prop_assert!(fit.half_width < 1e-8);
    }
}

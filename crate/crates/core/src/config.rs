//! Run configuration files.
//!
//! The format is TOML. Every key is checked: unknown keys, wrong types and
//! violated model assumptions are collected and reported together. The
//! grammar is documented in `docs/config.md`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::catalog::{Additive, Diffusion, Drift, Initial};
use crate::error::{Error, Result};
use crate::fem::CoefficientField;
use crate::scheme::{FractionalParams, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Simulate,
    Temporal,
    Spatial,
    Mlcheck,
    Noisecheck,
    Smoothing,
    DumpOperator,
}

impl StudyKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "simulate" => Self::Simulate,
            "temporal" => Self::Temporal,
            "spatial" => Self::Spatial,
            "mlcheck" => Self::Mlcheck,
            "noisecheck" => Self::Noisecheck,
            "smoothing" => Self::Smoothing,
            "dump_operator" => Self::DumpOperator,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Self::Csv),
            "json" => Some(Self::Json),
            "both" => Some(Self::Both),
            _ => None,
        }
    }

    pub fn csv(self) -> bool {
        self != Self::Json
    }

    pub fn json(self) -> bool {
        self != Self::Csv
    }
}

/// Operator coefficients `D` and `q` (constants).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    pub diffusion: f64,
    pub advection: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationConfig {
    /// Interior mesh nodes.
    pub n: usize,
    /// Time steps.
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub kind: StudyKind,
    /// Step counts (temporal) or interior node counts (spatial).
    pub levels: Vec<usize>,
    pub reference: usize,
    pub n_mc: usize,
    /// Allowed distance of a fitted exponent from its target.
    pub tolerance: f64,
    /// Smoothing exponents.
    pub rho: Vec<f64>,
    /// Time window `[t_min, t_max]` and point count for smoothing checks.
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub operator: OperatorConfig,
    pub discretization: DiscretizationConfig,
    pub study: StudyConfig,
    pub seed: u64,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn coefficients(&self) -> CoefficientField {
        CoefficientField::constant(self.operator.diffusion, self.operator.advection, self.problem.c0)
    }

    /// Re-run the cross-field checks, e.g. after command-line overrides.
    pub fn validate(&self) -> Result<()> {
        let mut errs = vec![];
        check_model(self, &mut errs);
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(vec![e.to_string()]))?;
    let mut r = Reader::default();
    r.allow(&root, "", &["seed", "problem", "discretization", "study", "output"]);
    let seed = r.u64(&root, "seed", 1);

    let empty = Table::new();
    let problem = r.table(&root, "problem").unwrap_or(&empty);
    r.allow(
        problem,
        "problem.",
        &["alpha", "hurst", "beta", "T", "c0", "D", "q", "lipschitz_L", "f", "g", "phi", "x0"],
    );
    let alpha = r.float(problem, "problem.alpha", 0.75);
    let hurst = r.float(problem, "problem.hurst", 0.75);
    let beta = r.float(problem, "problem.beta", 1.0);
    let t_final = r.float(problem, "problem.T", 1.0);
    let c0 = r.float(problem, "problem.c0", 0.0);
    let diffusion = r.float(problem, "problem.D", 1.0);
    let advection = r.float(problem, "problem.q", 0.0);
    let drift: Drift = r.catalog(problem, "problem.f").unwrap_or(Drift::Zero);
    let g: Diffusion = r.catalog(problem, "problem.g").unwrap_or(Diffusion::Zero);
    let phi: Additive = r.catalog(problem, "problem.phi").unwrap_or(Additive::Zero);
    let x0: Initial = r.catalog(problem, "problem.x0").unwrap_or(Initial::Sine { k: 1, a: 1.0 });
    let lipschitz = problem.get("lipschitz_L").map(|_| r.float(problem, "problem.lipschitz_L", 0.0));

    let disc = r.table(&root, "discretization").unwrap_or(&empty);
    r.allow(disc, "discretization.", &["n", "M", "n_modes", "decay"]);
    let n = r.usize(disc, "discretization.n", 64);
    let steps = r.usize(disc, "discretization.M", 256);
    let n_modes = r.usize(disc, "discretization.n_modes", 64);
    let decay = r.float(disc, "discretization.decay", 3.0);

    let study = r.table(&root, "study").unwrap_or(&empty);
    r.allow(
        study,
        "study.",
        &["kind", "levels", "ref", "n_mc", "tolerance", "rho", "t_min", "t_max", "t_points"],
    );
    let kind = match study.get("kind") {
        None => StudyKind::Simulate,
        Some(Value::String(s)) => StudyKind::parse(s).unwrap_or_else(|| {
            r.errs.push(format!(
                "study.kind = \"{s}\" is not one of simulate, temporal, spatial, mlcheck, noisecheck, smoothing, dump_operator"
            ));
            StudyKind::Simulate
        }),
        Some(_) => {
            r.errs.push("study.kind must be a string".into());
            StudyKind::Simulate
        }
    };
    let levels = r.list(study, "study.levels", |v| v.as_integer().and_then(|i| usize::try_from(i).ok()));
    let reference = r.usize(study, "study.ref", 0);
    let n_mc = r.usize(study, "study.n_mc", 100);
    let default_tolerance = match kind {
        StudyKind::Smoothing => 0.05,
        _ => 0.15,
    };
    let tolerance = r.float(study, "study.tolerance", default_tolerance);
    let rho = study
        .get("rho")
        .map(|_| r.list(study, "study.rho", as_f64))
        .unwrap_or_else(|| vec![0.25, 0.5, 1.0]);
    let t_min = r.float(study, "study.t_min", 1e-6);
    let t_max = r.float(study, "study.t_max", 1e-2);
    let t_points = r.usize(study, "study.t_points", 40);

    let output = r.table(&root, "output").unwrap_or(&empty);
    r.allow(output, "output.", &["dir", "format"]);
    let dir = match output.get("dir") {
        None => PathBuf::from("out"),
        Some(Value::String(s)) => PathBuf::from(s),
        Some(_) => {
            r.errs.push("output.dir must be a string".into());
            PathBuf::from("out")
        }
    };
    let format = match output.get("format") {
        None => OutputFormat::Both,
        Some(Value::String(s)) => OutputFormat::parse(s).unwrap_or_else(|| {
            r.errs.push(format!("output.format = \"{s}\" is not one of csv, json, both"));
            OutputFormat::Both
        }),
        Some(_) => {
            r.errs.push("output.format must be a string".into());
            OutputFormat::Both
        }
    };

    let mut problem = ProblemSpec {
        fractional: FractionalParams { alpha, hurst, beta },
        t_final,
        drift,
        diffusion: g,
        additive: phi,
        initial: x0,
        lipschitz_l: 0.0,
        c0,
        n_modes,
        decay,
    };
    problem.lipschitz_l = lipschitz.unwrap_or_else(|| problem.catalog_lipschitz());
    let cfg = RunConfig {
        problem,
        operator: OperatorConfig { diffusion, advection },
        discretization: DiscretizationConfig { n, steps },
        study: StudyConfig { kind, levels, reference, n_mc, tolerance, rho, t_min, t_max, t_points },
        seed,
        output: OutputConfig { dir, format },
    };
    let mut errs = r.errs;
    check_model(&cfg, &mut errs);
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errs))
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn is_pow2(m: usize) -> bool {
    m > 0 && m & (m - 1) == 0
}

/// Model assumptions and study structure.
fn check_model(cfg: &RunConfig, errs: &mut Vec<String>) {
    let p = &cfg.problem;
    errs.extend(p.fractional.violations());
    if !(p.t_final > 0.0 && p.t_final.is_finite()) {
        errs.push(format!("problem.T = {} must be positive", p.t_final));
    }
    if !(p.decay > 1.0) {
        errs.push(format!("discretization.decay = {} must exceed 1 (trace-class covariance Q)", p.decay));
    }
    if p.n_modes == 0 {
        errs.push("discretization.n_modes must be at least 1".into());
    }
    let cat = p.catalog_lipschitz();
    if !(p.lipschitz_l >= 0.0) {
        errs.push(format!("problem.lipschitz_L = {} must be non-negative", p.lipschitz_l));
    } else if p.lipschitz_l < cat * (1.0 - 1e-12) {
        errs.push(format!(
            "problem.lipschitz_L = {} is below {cat}, the Lipschitz constant of the selected f and g (Lipschitz assumption on F and G)",
            p.lipschitz_l
        ));
    }
    if !(cfg.operator.diffusion > 0.0) {
        errs.push(format!("problem.D = {} must be positive (ellipticity)", cfg.operator.diffusion));
    }
    if !(cfg.operator.advection.is_finite() && p.c0.is_finite()) {
        errs.push("problem.q and problem.c0 must be finite".into());
    }
    if cfg.discretization.n < 2 {
        errs.push(format!("discretization.n = {} must be at least 2", cfg.discretization.n));
    }
    if cfg.discretization.steps == 0 {
        errs.push("discretization.M must be at least 1".into());
    }
    let s = &cfg.study;
    match s.kind {
        StudyKind::Temporal => {
            check_levels(errs, &s.levels, s.reference, "step count", |m| is_pow2(m));
            if s.n_mc < 2 {
                errs.push("study.n_mc must be at least 2".into());
            }
        }
        StudyKind::Spatial => {
            check_levels(errs, &s.levels, s.reference, "node count n (n + 1 a power of two)", |n| is_pow2(n + 1) && n >= 3);
            if s.n_mc < 2 {
                errs.push("study.n_mc must be at least 2".into());
            }
        }
        StudyKind::Noisecheck if s.n_mc < 2 => errs.push("study.n_mc must be at least 2".into()),
        StudyKind::Smoothing => {
            if s.rho.is_empty() || s.rho.iter().any(|r| !(0.0..=1.0).contains(r)) {
                errs.push("study.rho must be a non-empty list of values in [0, 1]".into());
            }
            if !(s.t_min > 0.0 && s.t_max > s.t_min) || s.t_points < 2 {
                errs.push("study.t_min, study.t_max, study.t_points must describe a window 0 < t_min < t_max with at least 2 points".into());
            }
        }
        _ => {}
    }
    if !(s.tolerance > 0.0) {
        errs.push(format!("study.tolerance = {} must be positive", s.tolerance));
    }
}

fn check_levels(errs: &mut Vec<String>, levels: &[usize], reference: usize, what: &str, ok: impl Fn(usize) -> bool) {
    if levels.len() < 3 {
        errs.push(format!("study.levels needs at least 3 entries, got {}", levels.len()));
    }
    for &l in levels {
        if !ok(l) {
            errs.push(format!("study.levels entry {l} is not a dyadic {what}"));
        }
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        errs.push("study.levels must be strictly increasing".into());
    }
    if !ok(reference) {
        errs.push(format!("study.ref = {reference} is not a dyadic {what}"));
    } else if levels.iter().any(|&l| l >= reference) {
        errs.push(format!("study.ref = {reference} must be finer than every level"));
    }
}

#[derive(Default)]
struct Reader {
    errs: Vec<String>,
}

impl Reader {
    fn allow(&mut self, t: &Table, prefix: &str, keys: &[&str]) {
        for k in t.keys() {
            if !keys.contains(&k.as_str()) {
                self.errs.push(format!("unknown key `{prefix}{k}`"));
            }
        }
    }

    fn table<'a>(&mut self, t: &'a Table, key: &str) -> Option<&'a Table> {
        match t.get(key) {
            None => None,
            Some(Value::Table(inner)) => Some(inner),
            Some(_) => {
                self.errs.push(format!("`{key}` must be a table"));
                None
            }
        }
    }

    fn float(&mut self, t: &Table, name: &str, default: f64) -> f64 {
        let key = name.rsplit('.').next().unwrap_or(name);
        match t.get(key) {
            None => default,
            Some(v) => as_f64(v).unwrap_or_else(|| {
                self.errs.push(format!("`{name}` must be a number"));
                default
            }),
        }
    }

    fn u64(&mut self, t: &Table, key: &str, default: u64) -> u64 {
        match t.get(key) {
            None => default,
            Some(v) => v.as_integer().and_then(|i| u64::try_from(i).ok()).unwrap_or_else(|| {
                self.errs.push(format!("`{key}` must be a non-negative integer"));
                default
            }),
        }
    }

    fn usize(&mut self, t: &Table, name: &str, default: usize) -> usize {
        let key = name.rsplit('.').next().unwrap_or(name);
        match t.get(key) {
            None => default,
            Some(v) => match v.as_integer().and_then(|i| usize::try_from(i).ok()) {
                Some(i) => i,
                None => {
                    self.errs.push(format!("`{name}` must be a non-negative integer"));
                    default
                }
            },
        }
    }

    fn list<T>(&mut self, t: &Table, name: &str, conv: impl Fn(&Value) -> Option<T>) -> Vec<T> {
        let key = name.rsplit('.').next().unwrap_or(name);
        match t.get(key) {
            None => vec![],
            Some(Value::Array(items)) => {
                let out: Option<Vec<T>> = items.iter().map(&conv).collect();
                out.unwrap_or_else(|| {
                    self.errs.push(format!("`{name}` has an entry of the wrong type"));
                    vec![]
                })
            }
            Some(_) => {
                self.errs.push(format!("`{name}` must be an array"));
                vec![]
            }
        }
    }

    fn catalog<T: serde::de::DeserializeOwned>(&mut self, t: &Table, name: &str) -> Option<T> {
        let key = name.rsplit('.').next().unwrap_or(name);
        let v = t.get(key)?;
        match v.clone().try_into::<T>() {
            Ok(x) => Some(x),
            Err(e) => {
                self.errs.push(format!("`{name}`: {}", e.message()));
                None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(text: &str) -> Vec<String> {
        match parse_config_str(text) {
            Err(Error::Config(v)) => v,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn defaults_are_valid() {
        let cfg = parse_config_str("").unwrap();
        assert_eq!(cfg.problem.fractional, FractionalParams { alpha: 0.75, hurst: 0.75, beta: 1.0 });
        assert_eq!(cfg.problem.n_modes, 64);
        assert_eq!(cfg.problem.decay, 3.0);
        assert_eq!(cfg.study.kind, StudyKind::Simulate);
    }

    #[test]
    fn alpha_out_of_range_names_the_interval() {
        let e = errors("[problem]\nalpha = 0.4\n");
        assert_eq!(e.len(), 1);
        assert!(e[0].contains("(1/2, 1)"), "{e:?}");
    }

    #[test]
    fn beta_below_one_minus_two_h() {
        let e = errors("[problem]\nhurst = 0.75\nbeta = -0.6\n");
        assert!(e[0].contains("beta = -0.6") && e[0].contains("-0.5"), "{e:?}");
        assert!(parse_config_str("[problem]\nhurst = 0.75\nbeta = -0.4\n").is_ok());
    }

    #[test]
    fn all_violations_are_collected() {
        let e = errors(
            "seed = 1\ncolour = 3\n[problem]\nalpha = 1.2\nhurst = 0.3\n[discretization]\ndecay = 1.0\nn = \"x\"\n",
        );
        assert!(e.iter().any(|m| m.contains("unknown key `colour`")));
        assert!(e.iter().any(|m| m.contains("alpha")));
        assert!(e.iter().any(|m| m.contains("hurst")));
        assert!(e.iter().any(|m| m.contains("decay")));
        assert!(e.iter().any(|m| m.contains("discretization.n")));
    }

    #[test]
    fn unknown_nested_keys_and_catalog_fields() {
        let e = errors("[problem]\ngamma = 1\n[problem.g]\nkind = \"sin_profile\"\nc = 0.1\nd = 2\n");
        assert!(e.iter().any(|m| m.contains("problem.gamma")));
        assert!(e.iter().any(|m| m.contains("problem.g") && m.contains("`d`")), "{e:?}");
        let e = errors("[problem.f]\nkind = \"cubic\"\n");
        assert!(e[0].contains("problem.f"));
    }

    #[test]
    fn lipschitz_defaults_to_catalog_and_cannot_undercut_it() {
        let cfg = parse_config_str("[problem.f]\nkind = \"sine\"\nc = 0.3\n").unwrap();
        assert!((cfg.problem.lipschitz_l - 0.09).abs() < 1e-15);
        let e = errors("[problem]\nlipschitz_L = 0.01\n[problem.f]\nkind = \"sine\"\nc = 0.3\n");
        assert!(e[0].contains("Lipschitz"));
    }

    #[test]
    fn dyadic_levels() {
        let ok = "[study]\nkind = \"temporal\"\nlevels = [16, 32, 64]\nref = 256\n";
        assert_eq!(parse_config_str(ok).unwrap().study.levels, vec![16, 32, 64]);
        let e = errors("[study]\nkind = \"temporal\"\nlevels = [16, 24, 64]\nref = 64\n");
        assert!(e.iter().any(|m| m.contains("24")));
        assert!(e.iter().any(|m| m.contains("finer")));
        let e = errors("[study]\nkind = \"spatial\"\nlevels = [15, 31, 60]\nref = 127\n");
        assert!(e.iter().any(|m| m.contains("60")));
    }
}

//! Dispatch of a validated [`RunConfig`] to a study, with artifacts on disk.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::{RunConfig, StudyKind};
use crate::error::{Error, Result};
use crate::experiments::{
    contraction_check, fbm_check, ito_isometry_check, ml_validation_grid, smoothing_check, spatial_study,
    temporal_study, ContractionReport, ConvergenceReport, FbmReport, MlCheckRow, SmoothingReport, StatCheck,
};
use crate::fem::mass_norm;
use crate::io;
use crate::noise::sample_path;
use crate::numeric::logspace;
use crate::scheme::{run, wellposedness_check, Discretization, WellPosedness};

/// Exit status for a run whose checks did not meet their tolerance.
pub const EXIT_TOLERANCE: i32 = 4;

/// What a run produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            EXIT_TOLERANCE
        }
    }
}

/// Exit status for a finished or failed run.
pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) => o.exit_code(),
        Err(e) => e.exit_code(),
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    kind: StudyKind,
    pass: bool,
    wellposedness: WellPosedness,
    #[serde(flatten)]
    body: T,
    config: &'a RunConfig,
}

struct Sink<'a> {
    cfg: &'a RunConfig,
    files: Vec<PathBuf>,
}

impl Sink<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.cfg.output.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn csv(&mut self, name: &str, f: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        if self.cfg.output.format.csv() {
            let p = self.path(name);
            f(&p)?;
        }
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if self.cfg.output.format.json() {
            let p = self.path(name);
            io::write_json(&p, value)?;
        }
        Ok(())
    }
}

/// Run the study named in `cfg.study.kind`.
///
/// Writes data files, a JSON report and `summary.txt` into the output
/// directory (created if missing).
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output.dir)?;
    let wp = wellposedness_check(&cfg.problem);
    let mut sink = Sink { cfg, files: vec![] };
    let mut text = String::new();
    let p = &cfg.problem;
    let _ = writeln!(text, "study: {}", kind_name(cfg.study.kind));
    let _ = writeln!(
        text,
        "alpha = {}, hurst = {}, beta = {}, T = {}, seed = {}",
        p.fractional.alpha, p.fractional.hurst, p.fractional.beta, p.t_final, cfg.seed
    );
    let _ = writeln!(
        text,
        "well-posedness constant {:.6} with L = {} ({})",
        wp.value,
        p.lipschitz_l,
        if wp.pass { "below 1" } else { "WARNING: not below 1, uniqueness is not guaranteed" }
    );

    let pass = match cfg.study.kind {
        StudyKind::Simulate => simulate(cfg, wp, &mut sink, &mut text)?,
        StudyKind::Temporal | StudyKind::Spatial => converge(cfg, wp, &mut sink, &mut text)?,
        StudyKind::Mlcheck => mlcheck(cfg, wp, &mut sink, &mut text)?,
        StudyKind::Noisecheck => noisecheck(cfg, wp, &mut sink, &mut text)?,
        StudyKind::Smoothing => smoothing(cfg, wp, &mut sink, &mut text)?,
        StudyKind::DumpOperator => dump_operator(cfg, wp, &mut sink, &mut text)?,
    };
    let _ = writeln!(text, "result: {}", if pass { "PASS" } else { "FAIL" });
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let _ = writeln!(text, "written at unix time {stamp}");
    let summary_path = sink.path("summary.txt");
    std::fs::write(&summary_path, &text)?;
    Ok(Outcome { pass, files: sink.files, summary: text })
}

fn kind_name(k: StudyKind) -> &'static str {
    match k {
        StudyKind::Simulate => "simulate",
        StudyKind::Temporal => "temporal",
        StudyKind::Spatial => "spatial",
        StudyKind::Mlcheck => "mlcheck",
        StudyKind::Noisecheck => "noisecheck",
        StudyKind::Smoothing => "smoothing",
        StudyKind::DumpOperator => "dump_operator",
    }
}

#[derive(Serialize)]
struct SimulateBody {
    n: usize,
    steps: usize,
    final_mass_norm: f64,
    max_abs: f64,
}

fn simulate(cfg: &RunConfig, wp: WellPosedness, sink: &mut Sink, text: &mut String) -> Result<bool> {
    let disc = Discretization::fem(cfg.discretization.n, &cfg.coefficients())?;
    let noise = cfg.problem.noise_spec()?;
    let path = sample_path(&noise, cfg.problem.t_final, cfg.discretization.steps, cfg.seed)?;
    let traj = run(&cfg.problem, &disc, &path)?;
    sink.csv("trajectory.csv", |p| io::write_trajectory_csv(p, &traj))?;
    sink.csv("noise.csv", |p| io::write_noise_csv(p, &path))?;
    let body = SimulateBody {
        n: disc.n(),
        steps: path.steps,
        final_mass_norm: mass_norm(&disc.mass, traj.final_state()),
        max_abs: traj.states.iter().flatten().fold(0.0, |a: f64, v| a.max(v.abs())),
    };
    let _ = writeln!(
        text,
        "n = {}, M = {}, final mass norm {:.6e}, max |X| {:.6e}",
        body.n, body.steps, body.final_mass_norm, body.max_abs
    );
    sink.json("report.json", &Envelope { kind: cfg.study.kind, pass: true, wellposedness: wp, body, config: cfg })?;
    Ok(true)
}

fn converge(cfg: &RunConfig, _wp: WellPosedness, sink: &mut Sink, text: &mut String) -> Result<bool> {
    let s = &cfg.study;
    let mut report: ConvergenceReport = if s.kind == StudyKind::Temporal {
        let disc = Discretization::fem(cfg.discretization.n, &cfg.coefficients())?;
        temporal_study(&cfg.problem, &disc, &s.levels, s.reference, s.n_mc, cfg.seed)?
    } else {
        spatial_study(&cfg.problem, &cfg.coefficients(), &s.levels, s.reference, cfg.discretization.steps, s.n_mc, cfg.seed)?
    };
    report.config = serde_json::to_value(cfg)?;
    let pass = (report.slope - report.theory_slope).abs() <= s.tolerance && report.ci_overlaps(report.theory_slope);
    sink.csv("convergence.csv", |p| io::write_convergence_csv(p, &report))?;
    sink.json("report.json", &report)?;
    for i in 0..report.levels.len() {
        let _ = writeln!(
            text,
            "level {:>5}  h/dt = {:.6e}  rms error = {:.6e} (se {:.2e})",
            report.levels[i], report.axis[i], report.error[i], report.stderr[i]
        );
    }
    let _ = writeln!(
        text,
        "fitted slope {:.4} +/- {:.4} (95%), theoretical {:.4}, tolerance {}",
        report.slope, report.ci, report.theory_slope, s.tolerance
    );
    if let Some(r) = report.regularity_slope {
        let _ = writeln!(text, "increment regularity exponent of the reference runs {r:.4}");
    }
    let _ = writeln!(text, "samples {} ({} failed), reduction {}", report.n_mc, report.failed_runs, report.reduction);
    Ok(pass)
}

#[derive(Serialize)]
struct MlBody {
    rows: Vec<MlCheckRow>,
    failures: usize,
    worst_rel_error: f64,
}

fn mlcheck(cfg: &RunConfig, wp: WellPosedness, sink: &mut Sink, text: &mut String) -> Result<bool> {
    let rows = ml_validation_grid()?;
    sink.csv("ml_check.csv", |p| io::write_ml_check_csv(p, &rows))?;
    let failures = rows.iter().filter(|r| !r.pass()).count();
    let worst_rel_error = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    let _ = writeln!(text, "{} grid points, {failures} failures, worst relative error {worst_rel_error:.3e}", rows.len());
    let pass = failures == 0;
    sink.json(
        "report.json",
        &Envelope { kind: cfg.study.kind, pass, wellposedness: wp, body: MlBody { rows, failures, worst_rel_error }, config: cfg },
    )?;
    Ok(pass)
}

#[derive(Serialize)]
struct NoiseBody {
    fbm: FbmReport,
    ito_isometry: StatCheck,
}

fn noisecheck(cfg: &RunConfig, wp: WellPosedness, sink: &mut Sink, text: &mut String) -> Result<bool> {
    let p = &cfg.problem;
    let steps = cfg.discretization.steps;
    let fbm = fbm_check(p.fractional.hurst, p.t_final, steps, cfg.study.n_mc, cfg.seed)?;
    let ito = ito_isometry_check(&p.noise_spec()?, p.t_final, steps, cfg.study.n_mc, cfg.seed)?;
    sink.csv("fbm_covariance.csv", |path| io::write_fbm_csv(path, std::slice::from_ref(&fbm)))?;
    let pass = fbm.worst_covariance_z() <= 3.0 && fbm.terminal_variance.within(3.0) && ito.within(3.0);
    let _ = writeln!(
        text,
        "fBm: worst covariance z-score {:.3}, terminal variance z-score {:.3}, worst Wiener/fBm cross z-score {:.3}",
        fbm.worst_covariance_z(),
        fbm.terminal_variance.z_score(),
        fbm.worst_cross_z()
    );
    let _ = writeln!(text, "Ito isometry: estimate {:.6e}, exact {:.6e}, z-score {:.3}", ito.estimate, ito.exact, ito.z_score());
    sink.json(
        "report.json",
        &Envelope { kind: cfg.study.kind, pass, wellposedness: wp, body: NoiseBody { fbm, ito_isometry: ito }, config: cfg },
    )?;
    Ok(pass)
}

#[derive(Serialize)]
struct SmoothingBody {
    smoothing: Vec<SmoothingReport>,
    contraction: ContractionReport,
}

fn smoothing(cfg: &RunConfig, wp: WellPosedness, sink: &mut Sink, text: &mut String) -> Result<bool> {
    let disc = Discretization::fem(cfg.discretization.n, &cfg.coefficients())?;
    let s = &cfg.study;
    let alpha = cfg.problem.fractional.alpha;
    let grid = logspace(s.t_min, s.t_max, s.t_points);
    let reports: Vec<SmoothingReport> =
        s.rho.iter().map(|&rho| smoothing_check(&disc.fac, alpha, rho, &grid)).collect::<Result<_>>()?;
    let contraction = contraction_check(&disc.fac, alpha, &grid)?;
    sink.csv("smoothing.csv", |p| io::write_smoothing_csv(p, &reports))?;
    let mut pass = contraction.max_s1 <= 1.0 + 1e-12 && contraction.max_s2 <= contraction.s2_bound + 1e-12;
    for r in &reports {
        let ok = (r.exponent + alpha * r.rho).abs() <= s.tolerance;
        pass &= ok;
        let _ = writeln!(text, "rho = {}: fitted exponent {:.4}, expected {:.4}", r.rho, r.exponent, -alpha * r.rho);
    }
    let _ = writeln!(
        text,
        "max E_(a,1) = {:.6}, max E_(a,a) = {:.6} (bound {:.6})",
        contraction.max_s1, contraction.max_s2, contraction.s2_bound
    );
    sink.json(
        "report.json",
        &Envelope { kind: cfg.study.kind, pass, wellposedness: wp, body: SmoothingBody { smoothing: reports, contraction }, config: cfg },
    )?;
    Ok(pass)
}

#[derive(Serialize)]
struct OperatorBody {
    n: usize,
    h: f64,
    symmetric: bool,
    condition: f64,
    relative_residual: f64,
    smallest_real_part: f64,
}

fn dump_operator(cfg: &RunConfig, wp: WellPosedness, sink: &mut Sink, text: &mut String) -> Result<bool> {
    let disc = Discretization::fem(cfg.discretization.n, &cfg.coefficients())?;
    let asm = disc.assembly().ok_or_else(|| Error::Scheme("operator dump needs a finite-element discretization".into()))?;
    let h = disc.mesh().map(|m| m.h()).unwrap_or(f64::NAN);
    sink.csv("mass.csv", |p| io::write_matrix_csv(p, &asm.mass))?;
    sink.csv("stiffness.csv", |p| io::write_matrix_csv(p, &asm.stiffness))?;
    sink.csv("eigenvalues.csv", |p| io::write_eigenvalues_csv(p, disc.fac.eigenvalues()))?;
    let body = OperatorBody {
        n: disc.n(),
        h,
        symmetric: disc.fac.is_symmetric(),
        condition: disc.fac.condition(),
        relative_residual: disc.fac.relative_residual(),
        smallest_real_part: disc.fac.eigenvalues().iter().map(|l| l.re).fold(f64::INFINITY, f64::min),
    };
    let _ = writeln!(
        text,
        "n = {}, symmetric {}, eigenvector condition {:.3e}, smallest Re(lambda) {:.6e}",
        body.n, body.symmetric, body.condition, body.smallest_real_part
    );
    sink.json("report.json", &Envelope { kind: cfg.study.kind, pass: true, wellposedness: wp, body, config: cfg })?;
    Ok(true)
}

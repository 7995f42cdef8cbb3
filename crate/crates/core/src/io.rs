//! CSV and JSON artifacts.
//!
//! Column orders are part of the file-format contract (see `docs/formats.md`).
//! Floats are written in shortest round-trip form, so identical inputs give
//! byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::experiments::{ConvergenceReport, FbmReport, MlCheckRow, SmoothingReport};
use crate::fem::Tridiagonal;
use crate::noise::NoisePath;
use crate::scheme::Trajectory;

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<File>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    Ok(w)
}

/// `row, col, value` for the nonzero entries, 0-based.
pub fn write_matrix_csv(path: &Path, m: &Tridiagonal) -> Result<()> {
    let mut w = writer(path, &["row", "col", "value"])?;
    let n = m.dim();
    for i in 0..n {
        if i > 0 {
            w.serialize((i, i - 1, m.lower[i - 1]))?;
        }
        w.serialize((i, i, m.diag[i]))?;
        if i + 1 < n {
            w.serialize((i, i + 1, m.upper[i]))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `index, re, im`.
pub fn write_eigenvalues_csv(path: &Path, lambdas: &[Complex64]) -> Result<()> {
    let mut w = writer(path, &["index", "re", "im"])?;
    for (i, l) in lambdas.iter().enumerate() {
        w.serialize((i, l.re, l.im))?;
    }
    w.flush()?;
    Ok(())
}

/// `mode, step, wiener_increment, fbm_increment`, modes 1-based.
pub fn write_noise_csv(path: &Path, p: &NoisePath) -> Result<()> {
    let mut w = writer(path, &["mode", "step", "wiener_increment", "fbm_increment"])?;
    for i in 0..p.n_modes() {
        for j in 0..p.steps {
            w.serialize((i + 1, j, p.wiener[i][j], p.fbm[i][j]))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `step, time, node, value`; `node` is the coordinate of the interior node.
pub fn write_trajectory_csv(path: &Path, t: &Trajectory) -> Result<()> {
    let mut w = writer(path, &["step", "time", "node", "value"])?;
    for (j, (time, state)) in t.grid.iter().zip(&t.states).enumerate() {
        for (x, v) in t.nodes.iter().zip(state) {
            w.serialize((j, time, x, v))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `level, axis, error, stderr`.
pub fn write_convergence_csv(path: &Path, r: &ConvergenceReport) -> Result<()> {
    let mut w = writer(path, &["level", "axis", "error", "stderr"])?;
    for i in 0..r.levels.len() {
        w.serialize((r.levels[i], r.axis[i], r.error[i], r.stderr[i]))?;
    }
    w.flush()?;
    Ok(())
}

/// `alpha, beta, x, value, reference, oracle, rel_error, recurrence_error, pass`.
pub fn write_ml_check_csv(path: &Path, rows: &[MlCheckRow]) -> Result<()> {
    let mut w = writer(
        path,
        &["alpha", "beta", "x", "value", "reference", "oracle", "rel_error", "recurrence_error", "pass"],
    )?;
    for r in rows {
        w.serialize((r.alpha, r.beta, r.x, r.value, r.reference, r.oracle, r.rel_error, r.recurrence_error, r.pass()))?;
    }
    w.flush()?;
    Ok(())
}

/// `hurst, i, j, estimate, stderr, exact, z`.
pub fn write_fbm_csv(path: &Path, reports: &[FbmReport]) -> Result<()> {
    let mut w = writer(path, &["hurst", "i", "j", "estimate", "stderr", "exact", "z"])?;
    for r in reports {
        for (k, c) in r.covariance.iter().enumerate() {
            w.serialize((r.hurst, k / r.steps, k % r.steps, c.estimate, c.stderr, c.exact, c.z_score()))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `rho, t, m`.
pub fn write_smoothing_csv(path: &Path, reports: &[SmoothingReport]) -> Result<()> {
    let mut w = writer(path, &["rho", "t", "m"])?;
    for r in reports {
        for (t, m) in r.t.iter().zip(&r.m) {
            w.serialize((r.rho, t, m))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let m = Tridiagonal { lower: vec![-1.0], diag: vec![2.0, 2.5], upper: vec![-0.5] };
        write_matrix_csv(&p, &m).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "row,col,value\n0,0,2.0\n0,1,-0.5\n1,0,-1.0\n1,1,2.5\n");
    }

    #[test]
    fn noise_csv_is_mode_major() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("n.csv");
        let path = NoisePath {
            t_final: 1.0,
            steps: 2,
            wiener: vec![vec![0.1, 0.2], vec![0.3, 0.4]],
            fbm: vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            seed: 0,
        };
        write_noise_csv(&p, &path).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(
            text,
            "mode,step,wiener_increment,fbm_increment\n1,0,0.1,1.0\n1,1,0.2,2.0\n2,0,0.3,3.0\n2,1,0.4,4.0\n"
        );
    }
}

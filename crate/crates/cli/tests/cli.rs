use std::path::Path;
use std::process::{Command, Output};

fn fracexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracexp")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn check_ml_passes_and_writes_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ml");
    let o = fracexp(&["check-ml", "--out", out.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("ml_check.csv")).unwrap();
    assert!(table.starts_with("alpha,beta,x,value,reference,oracle,rel_error,recurrence_error,pass\n"));
    assert_eq!(table.lines().count(), 661);
    assert!(!table.contains(",false\n"));
    assert!(!out.join("report.json").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("result: PASS"));
}

#[test]
fn invalid_config_lists_every_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", "[problem]\nalpha = 0.4\nhurst = 0.75\nbeta = -0.6\nspeed = 1\n");
    let o = fracexp(&["simulate", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("problem.speed"), "{err}");
    assert!(err.contains("(1/2, 1)"), "{err}");
    assert!(err.contains("beta = -0.6"), "{err}");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let o = fracexp(&["simulate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dump_operator_and_seed_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "op.toml", "[problem]\nq = 3.0\n[discretization]\nn = 5\n");
    let out = tmp.path().join("op");
    let o = fracexp(&["dump-operator", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stiff = std::fs::read_to_string(out.join("stiffness.csv")).unwrap();
    let lines: Vec<&str> = stiff.lines().collect();
    assert_eq!(lines[0], "row,col,value");
    // 1/h = 6, advection q/2 = 1.5 above and -1.5 below the diagonal
    assert_eq!(lines[1], "0,0,12.0");
    assert_eq!(lines[2], "0,1,-4.5");
    assert_eq!(lines[3], "1,0,-7.5");
    let report: String = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"seed\": 11"));
    assert!(report.contains("\"symmetric\": false"));
}

#[test]
fn temporal_study_reports_slope_and_exit_category() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "t.toml",
        "[problem]\ng = { kind = \"sin_profile\", c = 0.25 }\nphi = { kind = \"sin_profile\", c = 1.0 }\n\
         [discretization]\nn = 7\nn_modes = 4\n[study]\nlevels = [4, 8, 16]\nref = 64\nn_mc = 4\n",
    );
    let out = tmp.path().join("t");
    let o = fracexp(&["converge-time", "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", "2"]);
    let code = o.status.code().unwrap();
    assert!(code == 0 || code == 4, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["levels"], serde_json::json!([4, 8, 16]));
    assert_eq!(report["config"]["study"]["reference"], 64);
    assert!(report["slope"].is_f64() && report["ci"].is_f64());
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("fitted slope") && summary.contains("well-posedness constant"));
    assert!(std::fs::read_to_string(out.join("convergence.csv")).unwrap().starts_with("level,axis,error,stderr\n4,"));
}

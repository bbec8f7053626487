use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_skewform"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

#[test]
fn unknown_suite_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["verify", "bogus", "--out-dir"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown suite"));
}

#[test]
fn verify_energy_has_zero_state_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["verify", "energy", "--trials", "1", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rd = csv::Reader::from_path(dir.path().join("verify_energy.csv")).unwrap();
    let headers = rd.headers().unwrap().clone();
    let mode = headers.iter().position(|h| h == "mode").unwrap();
    let raw = headers.iter().position(|h| h == "raw").unwrap();
    let zero = rd
        .records()
        .map(|r| r.unwrap())
        .filter(|r| r[mode].contains("zero"))
        .collect::<Vec<_>>();
    assert!(!zero.is_empty());
    assert!(zero.iter().all(|r| r[raw].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn missing_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run", "--config", "does/not/exist.toml", "--out-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn config_error_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    let src = std::fs::read_to_string(scenario("burgers_periodic.toml"))
        .unwrap()
        .replace("stride = 10", "stride = 10\nspeed = 3");
    std::fs::write(&cfg, src).unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 25") && err.contains("speed"), "{err}");
}

#[test]
fn marching_a_singular_norm_model_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("e.toml");
    let src = std::fs::read_to_string(scenario("euler2d_identity.toml"))
        .unwrap()
        .replace("modes = [\"identity\"]", "modes = [\"nonlinear\"]");
    std::fs::write(&cfg, src).unwrap();
    let out_dir = dir.path().join("out");
    let out = bin().args(["run", "--config"]).arg(&cfg).arg("--out-dir").arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn burgers_periodic_run_conserves() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(scenario("burgers_periodic.toml"))
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rd = csv::Reader::from_path(dir.path().join("burgers_periodic_nonlinear.csv")).unwrap();
    let headers: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(headers, ["t", "E", "rate", "boundary_flux", "volume_residual"]);
    let mut rows = 0;
    for r in rd.records() {
        let r = r.unwrap();
        let vr: f64 = r[4].parse().unwrap();
        assert!(vr.abs() <= 1e-12, "{vr}");
        rows += 1;
    }
    assert_eq!(rows, 9);
    let state = std::fs::read_to_string(dir.path().join("burgers_periodic_nonlinear_final.txt")).unwrap();
    assert!(state.starts_with("# model: burgers1d"));
    assert_eq!(state.lines().filter(|l| !l.starts_with('#')).count(), 32);
}

#[test]
fn standard_linearisation_grows_new_does_not() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(scenario("burgers_standard_vs_new.toml"))
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let ratio = |mode: &str| {
        let mut rd = csv::Reader::from_path(dir.path().join(format!("burgers_standard_vs_new_{mode}.csv"))).unwrap();
        let e: Vec<f64> = rd.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
        e[e.len() - 1] / e[0]
    };
    assert!((ratio("new-linearised") - 1.0).abs() < 1e-6);
    assert!(ratio("standard-linearised") > 2.0);
}

#[test]
fn analyze_boundary_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "analyze-boundary",
            "--model",
            "swe2d",
            "--state",
            "4,-2,0",
            "--normal",
            "1,0",
            "--formulation",
            "linearised",
            "--out-dir",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rd = csv::Reader::from_path(dir.path().join("analysis_boundary.csv")).unwrap();
    let row = rd.records().next().unwrap().unwrap();
    assert_eq!(&row[8], "3");
}

#[test]
fn convergence_of_constant_data_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    let src = std::fs::read_to_string(scenario("burgers_periodic.toml"))
        .unwrap()
        .replace("amplitude = 0.1", "offset = 0.3");
    std::fs::write(&cfg, src).unwrap();
    let out = bin()
        .args(["convergence", "--levels", "3", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("exact"), "{text}");
}

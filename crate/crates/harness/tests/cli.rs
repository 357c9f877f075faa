use std::path::Path;
use std::process::{Command, Output};

fn lhk(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lhk")).args(args).current_dir(dir).output().expect("lhk runs")
}

fn config(dir: &Path, text: &str) -> String {
    let path = dir.join("cfg.json");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "{}");
    for args in [
        vec!["verify", "core", "--config", &cfg, "--format", "xml"],
        vec!["verify", "everything", "--config", &cfg],
        vec!["verify", "core", "--config", "missing.json"],
        vec!["multiplier", "apply", "--name", "fractional_L", "--params", "{}"],
        vec!["multiplier", "apply", "--name", "fractional_L", "--params", "[1]"],
        vec!["transform", "--profile", "bump_2", "--config", &cfg, "--out", "f.csv"],
    ] {
        let out = lhk(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let bad = config(dir.path(), r#"{"grid": {"nx": 0}}"#);
    assert_eq!(lhk(&["verify", "core", "--config", &bad], dir.path()).status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "{}");
    let out = Command::new(env!("CARGO_BIN_EXE_lhk"))
        .args(["verify", "core", "--config", &cfg])
        .env("LHK_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn transform_writes_spectral_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), r#"{"alpha": 0}"#);
    let out = lhk(&["transform", "--profile", "gaussian", "--config", &cfg, "--out", "f.csv"], dir.path());
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("f.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,m,re,im"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect()).collect();
    // 129 levels per lambda node, imaginary part zero for the even Gaussian
    assert_eq!(rows.len() % 129, 0);
    assert!(rows.iter().all(|r| r.len() == 4 && r[3].abs() < 1e-12));
}

#[test]
fn multiplier_apply_writes_grid_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), r#"{"alpha": 0, "grid": {"nx": 60, "nt": 120, "n_lambda": 60}}"#);
    let out = lhk(
        &[
            "multiplier",
            "apply",
            "--name",
            "constant",
            "--params",
            r#"{"re": 2, "im": 0}"#,
            "--config",
            &cfg,
            "--out",
            "m.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    assert!(text.starts_with("x,t,re,im\n"));
    // 2 f at every node
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let f = (-v[0] * v[0] - v[1] * v[1]).exp();
        assert!((v[2] - 2.0 * f).abs() < 1e-12, "{line}");
    }
}

#[test]
fn atom_validate_passes_and_make_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), r#"{"alpha": 0, "hp": {"p": [1], "radii": [0.5, 2]}}"#);
    let out = lhk(&["atom", "validate", "--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["metrics"].as_array().unwrap().iter().all(|m| m["status"] != "fail"));
    let out = lhk(&["atom", "make", "--config", &cfg, "--out", "atoms"], dir.path());
    assert!(out.status.success());
    assert!(dir.path().join("atoms/atom_alpha0_p1_r0.5.csv").exists());
    assert!(dir.path().join("atoms/atom_alpha0_p1_r2.csv").exists());
}

#[test]
fn verify_core_writes_reports_and_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), r#"{"alpha": 0}"#);
    let out = lhk(&["verify", "core", "--config", &cfg, "--out", "out", "--format", "csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = std::fs::read_to_string(dir.path().join("out/core.csv")).unwrap();
    assert!(text.starts_with("suite,metric,value,comparison,reference,tolerance,status\n"));
    assert!(!text.contains(",fail\n"));
}

#[test]
fn failing_metric_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    // a defect bound no grid can meet
    let cfg =
        config(dir.path(), r#"{"alpha": 0, "profiles": ["gaussian"], "tolerances": {"plancherel_smooth": 1e-30}}"#);
    let out = lhk(&["verify", "core", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}

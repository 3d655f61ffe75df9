use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lensbeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lensbeam")).args(args).output().unwrap()
}

fn scene_path() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenes/default.toml")
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .and_then(|v| v.split_whitespace().next())
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| panic!("no {key} in:\n{text}"))
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(lensbeam(&["--help"]).status.code(), Some(0));
    assert_eq!(lensbeam(&["--version"]).status.code(), Some(0));
    assert_eq!(lensbeam(&["sweep", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(lensbeam(&[]).status.code(), Some(2));
    assert_eq!(lensbeam(&["design", "--freq", "28e9"]).status.code(), Some(2));
    assert_eq!(lensbeam(&["simulate", "--scene", "x.toml", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn bad_scene_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "frequency_hz = 28e9\n[lens]\nradius_lambda = -1.0\neps_r = 2.1\n").unwrap();
    let o = lensbeam(&["simulate", "--scene", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_files_exit_five() {
    assert_eq!(lensbeam(&["metrics", "--pattern", "/nonexistent/p.csv"]).status.code(), Some(5));
    assert_eq!(lensbeam(&["simulate", "--scene", "/nonexistent/s.toml"]).status.code(), Some(5));
}

#[test]
fn design_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = lensbeam(&["design", "--freq", "28e9", "--hpbw", "6.39", "--out", out, "--format", "text", "--format", "json"]);
    assert!(o.status.success());
    assert!((value(&stdout(&o), "required_R0") - 49.25).abs() <= 0.05);
    assert!(dir.path().join("design.txt").exists());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("design.json")).unwrap()).unwrap();
    assert!(json.is_object());
}

#[test]
fn design_rejects_out_of_window_plate() {
    let o = lensbeam(&["design", "--freq", "28e9", "--hpbw", "6.39", "--h-lambda", "1.2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("mode_check = fail"));
}

/// simulate → field dump → farfield → metrics gives the same beam at each step.
#[test]
fn simulate_farfield_metrics_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let scene = scene_path();
    let sim = lensbeam(&[
        "simulate", "--scene", &scene, "--port", "7", "--max-periods", "30", "--out", out,
        "--format", "csv", "--format", "svg", "--format", "field-dump", "--format", "json",
    ]);
    assert_eq!(sim.status.code(), Some(0), "{}", String::from_utf8_lossy(&sim.stderr));
    assert!(String::from_utf8_lossy(&sim.stderr).contains("still changing"));
    let text = stdout(&sim);
    let dir_sim = value(&text, "peak_direction_deg");
    assert!(dir_sim > 10.0 && dir_sim < 18.0, "{dir_sim}");
    for f in ["pattern_F7.csv", "pattern_F7.svg", "field_F7.bin", "metrics_F7.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }

    let ff_dir = dir.path().join("ff");
    std::fs::create_dir(&ff_dir).unwrap();
    let field = dir.path().join("field_F7.bin");
    let ff = lensbeam(&[
        "farfield", "--field", field.to_str().unwrap(), "--scene", &scene, "--out", ff_dir.to_str().unwrap(),
        "--format", "csv",
    ]);
    assert_eq!(ff.status.code(), Some(0), "{}", String::from_utf8_lossy(&ff.stderr));
    assert!((value(&stdout(&ff), "peak_direction_deg") - dir_sim).abs() <= 1e-3);

    let m = lensbeam(&["metrics", "--pattern", dir.path().join("pattern_F7.csv").to_str().unwrap()]);
    assert_eq!(m.status.code(), Some(0));
    let mt = stdout(&m);
    assert!((value(&mt, "peak_direction_deg") - dir_sim).abs() <= 1e-3);
    assert!((value(&mt, "hpbw_deg") - value(&text, "hpbw_deg")).abs() <= 1e-3);
    check_csv_header(&dir.path().join("pattern_F7.csv"));
}

fn check_csv_header(p: &Path) {
    let t = std::fs::read_to_string(p).unwrap();
    assert!(t.lines().any(|l| l.starts_with("# config_hash")));
}

#[test]
fn analytic_only_validate_passes() {
    let o = lensbeam(&["validate", "--analytic-only"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).matches("[PASS]").count(), 3);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qcdi(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcdi"))
        .args(args)
        .current_dir(dir)
        .env_remove("QCDI_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn write_spec(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn minimal_spec_validates() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(
        tmp.path(),
        "dj.json",
        r#"{"problem": "dj", "table": "01", "variant": "constant_H", "T": [1.0]}"#,
    );
    let out = qcdi(&["validate", &spec], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("1 run(s)"));
}

#[test]
fn empty_time_list_is_rejected_with_its_path() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "bad.json", r#"{"problem": "dj", "table": "01", "T": []}"#);
    let out = qcdi(&["validate", &spec], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("T: "), "{}", stderr(&out));
}

#[test]
fn unknown_keys_are_fatal_unless_lenient() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(
        tmp.path(),
        "typo.json",
        r#"{"problem": "dj", "table": "01", "T": [1], "thresholds": {"min_fidelty": 0.5}}"#,
    );
    let strict = qcdi(&["run", &spec, "--out", "strict"], tmp.path());
    assert_eq!(strict.status.code(), Some(2));
    assert!(stderr(&strict).contains("thresholds.min_fidelty: unknown key"));
    assert!(!tmp.path().join("strict").exists());

    let lenient = qcdi(&["run", &spec, "--lenient", "--out", "lenient"], tmp.path());
    assert!(lenient.status.success(), "{}", stderr(&lenient));
    assert!(stderr(&lenient).contains("warning: thresholds.min_fidelty"));
    assert_eq!(summary(&tmp.path().join("lenient"))["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn balanced_function_reports_zero_certainty() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(
        tmp.path(),
        "dj.json",
        r#"{"problem": "dj", "table": "0110", "variants": ["constant_H", "oscillating"], "T": [0.1, 10]}"#,
    );
    let out = qcdi(&["run", &spec, "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let s = summary(&tmp.path().join("o"));
    assert_eq!(s["passed"], true);
    let runs = s["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 4);
    for run in runs {
        assert_eq!(run["outcome"], "balanced");
        assert!(run["certainty"].as_f64().unwrap() < 1e-8);
    }
}

#[test]
fn grover_sweep_finds_the_same_index() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(
        tmp.path(),
        "g.json",
        r#"{"problem": "grover", "N": 8, "w": 5, "sign": [1, -1], "T": [0.5, 50]}"#,
    );
    let out = qcdi(&["run", &spec, "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let s = summary(&tmp.path().join("o"));
    let runs = s["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 4);
    let times: Vec<f64> = runs.iter().map(|r| r["T"].as_f64().unwrap()).collect();
    assert_eq!(times, [0.5, 0.5, 50.0, 50.0]);
    assert!(runs.iter().all(|r| r["outcome"] == "5"));
}

#[test]
fn threshold_breach_sets_exit_status() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(
        tmp.path(),
        "g.json",
        r#"{"problem": "grover", "N": 4, "w": 0, "T": [1], "thresholds": {"max_residual": -1}}"#,
    );
    let out = qcdi(&["run", &spec, "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let s = summary(&tmp.path().join("o"));
    assert_eq!(s["passed"], false);
    assert!(s["runs"][0]["breaches"][0].as_str().unwrap().starts_with("residual"));
}

#[test]
fn closed_form_off_the_diagonal_breaches() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(
        tmp.path(),
        "p.json",
        r#"{"problem": "dj", "table": "00", "variant": "polynomial",
            "poly": {"n": 1, "r": 2, "hamiltonian": "closed_form"}, "T": [1]}"#,
    );
    let out = qcdi(&["run", &spec, "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let residual = summary(&tmp.path().join("o"))["runs"][0]["max_residual"].as_f64().unwrap();
    assert!(residual > 0.1, "{residual}");
}

fn csv_bodies(dir: &Path) -> Vec<(String, String)> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let text = fs::read_to_string(dir.join(&n)).unwrap();
            let (first, body) = text.split_once('\n').unwrap();
            assert!(first.starts_with("# qcdi "), "{n}: {first}");
            (n, body.to_string())
        })
        .collect()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(
        tmp.path(),
        "p.json",
        r#"{"problem": "dj", "table": "10", "variants": ["polynomial", "oscillating", "constant_H"],
            "poly": {"n": 2, "r": 3}, "T": [3, 0.2], "grid": 41, "steps": 800,
            "report": {"trajectory": true, "schedule": true}}"#,
    );
    for dir in ["a", "b"] {
        let out = qcdi(&["run", &spec, "--out", dir], tmp.path());
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let a = csv_bodies(&tmp.path().join("a"));
    let b = csv_bodies(&tmp.path().join("b"));
    assert_eq!(a.len(), 1 + 6 * 4);
    assert_eq!(a, b);
}

#[test]
fn out_dir_falls_back_to_spec_then_environment() {
    let tmp = TempDir::new().unwrap();
    let with_out = write_spec(
        tmp.path(),
        "a.json",
        r#"{"problem": "grover", "N": 2, "w": 1, "T": [1], "out": "from-spec"}"#,
    );
    let without = write_spec(tmp.path(), "b.json", r#"{"problem": "grover", "N": 2, "w": 1, "T": [1]}"#);
    let run_env = |spec: &str| {
        Command::new(env!("CARGO_BIN_EXE_qcdi"))
            .args(["run", spec])
            .current_dir(tmp.path())
            .env("QCDI_OUT_DIR", "from-env")
            .output()
            .unwrap()
    };
    assert!(run_env(&with_out).status.success());
    assert!(tmp.path().join("from-spec/summary.json").exists());
    assert!(run_env(&without).status.success());
    assert!(tmp.path().join("from-env/summary.json").exists());
    assert!(qcdi(&["run", &without], tmp.path()).status.success());
    assert!(tmp.path().join("qcdi-out/summary.json").exists());
}

#[test]
fn flags_override_grid_and_steps() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(
        tmp.path(),
        "t.json",
        r#"{"problem": "dj", "table": "01", "T": [1], "report": {"trajectory": true}}"#,
    );
    let out = qcdi(&["run", &spec, "--grid", "11", "--steps", "30", "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let residual = fs::read_to_string(tmp.path().join("o/run000_constant_H_residual.csv")).unwrap();
    assert_eq!(residual.lines().count(), 2 + 11);

    let bad = qcdi(&["run", &spec, "--grid", "11", "--steps", "35", "--out", "p"], tmp.path());
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("steps"));
}

#[test]
fn demos_pass() {
    let tmp = TempDir::new().unwrap();
    for demo in ["dj", "grover"] {
        let out = qcdi(&["demo", demo, "--out", demo], tmp.path());
        assert!(out.status.success(), "{demo}: {}", stderr(&out));
        assert_eq!(summary(&tmp.path().join(demo))["passed"], true);
    }
}

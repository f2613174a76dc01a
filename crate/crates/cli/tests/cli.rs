//! End-to-end runs of the `mde` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mde_cli::parse_config;

fn mde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mde"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run_config(dir: &Path, body: &str, out: &str) -> (Output, PathBuf) {
    let config = write_config(dir, "config.json", body);
    let out = dir.join(out);
    let output = mde(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    (output, out)
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

const SIR: &str = r#"{
    "mode": "simulate", "S0": 0.99, "R0": 0.0, "I0": [[0.0, 0.01]], "N_pop": 1.0,
    "beta": 0.3, "nu": 0.1, "pvf": {"kind": "barycenter_split"},
    "T": 50, "N_grid": 100, "snapshot_stride": 500
}"#;

#[test]
fn simulate_keeps_the_conserved_column_constant() {
    let dir = tempfile::tempdir().unwrap();
    let (output, out) = run_config(dir.path(), SIR, "sim");
    assert!(output.status.success(), "{output:?}");
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,S,I_total,R,conserved\n"));
    let conserved = column(&csv, "conserved");
    assert_eq!(conserved.len(), 5001);
    assert!(conserved.iter().all(|c| (c - 1.0).abs() <= 1e-10));
    assert!(out.join("manifest.json").exists());
    assert!(out.join("measure_0.csv").exists());
    assert!(out.join("measure_5000.csv").exists());
}

#[test]
fn splitting_convergence_is_first_order_or_better() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{
        "mode": "convergence", "mu0": [[-0.3037, 0.4], [0.1234, 0.35], [0.5111, 0.25]],
        "pvf": {"kind": "barycenter_split"}, "T": 1, "N_grid": [10, 20, 40, 80],
        "convergence": {"reference": "splitting"}
    }"#;
    let (output, out) = run_config(dir.path(), body, "conv");
    assert!(output.status.success(), "{output:?}");
    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(column(&csv, "N"), vec![10.0, 20.0, 40.0, 80.0]);
    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    let slope = fit["slope"].as_f64().unwrap();
    assert!(slope <= -0.9, "{slope}");
    assert_eq!(fit["fitted_n"], serde_json::json!([20, 40, 80]));
}

#[test]
fn self_similar_convergence_is_first_order() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{
        "mode": "convergence", "mu0": [[0, 1]], "phi": [[0, -0.5], [1, 0.5]],
        "T": 1, "N_grid": [10, 20, 40, 80], "convergence": {"reference": "self_similar"}
    }"#;
    let (output, out) = run_config(dir.path(), body, "conv");
    assert!(output.status.success(), "{output:?}");
    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    assert!(fit["slope"].as_f64().unwrap() <= -0.9);
}

#[test]
fn distance_between_identical_snapshots_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let snap = write_config(dir.path(), "a.csv", "position,mass\n-0.5,0.25\n0.75,1.5\n");
    let out = dir.path().join("dist");
    let output = mde(&[
        "--mode",
        "distance",
        "--a",
        snap.to_str().unwrap(),
        "--b",
        snap.to_str().unwrap(),
        "--plan",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let csv = fs::read_to_string(out.join("distance.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(column(&csv, "generalized_wasserstein"), vec![0.0]);
    assert_eq!(column(&csv, "wasserstein_1"), vec![0.0]);
    let plan = fs::read_to_string(out.join("plan.csv")).unwrap();
    assert!(plan.starts_with("src,dst,mass\n"));
    assert_eq!(column(&plan, "mass").iter().sum::<f64>(), 1.75);
}

#[test]
fn distance_reports_nan_w1_for_unequal_masses() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a.csv", "position,mass\n0,1\n");
    let b = write_config(dir.path(), "b.csv", "position,mass\n3,1\n0,0.5\n");
    let out = dir.path().join("dist");
    let output = mde(&[
        "--mode",
        "distance",
        "--a",
        a.to_str().unwrap(),
        "--b",
        b.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let csv = fs::read_to_string(out.join("distance.csv")).unwrap();
    assert_eq!(column(&csv, "generalized_wasserstein"), vec![1.5]);
    assert!(column(&csv, "wasserstein_1")[0].is_nan());
}

#[test]
fn identical_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{
        "mode": "validate", "seed": 11, "S0": 0.9, "I0": [[0, 0.1]], "N_pop": 1,
        "beta": 0.3, "nu": 0.1, "pvf": {"kind": "barycenter_split"}, "T": 5, "N_grid": 40,
        "validate": {"pairs": 10, "resolution": 100}
    }"#;
    let (first, a) = run_config(dir.path(), body, "a");
    let (second, b) = run_config(dir.path(), body, "b");
    assert!(
        first.status.success() && second.status.success(),
        "{first:?}"
    );
    let read = |p: &Path| fs::read(p.join("validate.csv")).unwrap();
    assert_eq!(read(&a), read(&b));

    let conv = r#"{
        "mode": "convergence", "mu0": [[0.13, 1]], "pvf": {"kind": "barycenter_split"},
        "T": 1, "N_grid": [12, 6, 24], "convergence": {"reference": "splitting"}
    }"#;
    let (_, c) = run_config(dir.path(), conv, "c");
    let (_, d) = run_config(dir.path(), conv, "d");
    for f in ["convergence.csv", "fit.json"] {
        assert_eq!(fs::read(c.join(f)).unwrap(), fs::read(d.join(f)).unwrap());
    }
    let csv = fs::read_to_string(c.join("convergence.csv")).unwrap();
    assert_eq!(column(&csv, "N"), vec![6.0, 12.0, 24.0]);
}

#[test]
fn validate_passes_on_default_checks() {
    let dir = tempfile::tempdir().unwrap();
    let (output, out) = run_config(dir.path(), r#"{"mode": "validate", "seed": 3}"#, "v");
    assert!(output.status.success(), "{output:?}");
    let csv = fs::read_to_string(out.join("validate.csv")).unwrap();
    assert!(csv.starts_with("input-id,oracle-value,scheme-value,gap,tolerance,pass\n"));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
    assert!(csv.contains("\ngw-0,") && csv.contains("\nsplitting-0,"));
}

#[test]
fn validation_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"mode": "validate", "validate": {"pairs": 5, "resolution": 1, "tolerance": 0}}"#;
    let (output, out) = run_config(dir.path(), body, "v");
    assert_eq!(output.status.code(), Some(1), "{output:?}");
    assert!(out.join("validate.csv").exists());
}

#[test]
fn config_errors_exit_with_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    for (body, field) in [
        (
            r#"{"mode": "simulate", "mu0": [[0, 1]], "phi": [[0, 0], [1, 0]], "T": 1, "N_grid": 1}"#,
            "N_grid",
        ),
        (
            r#"{"mode": "simulate", "mu0": [[0, 1]], "phi": [[0, 0], [1, 0]], "T": 0, "N_grid": 4}"#,
            "T",
        ),
        (
            r#"{"mode": "simulate", "mu0": [[0, 1]], "T": 1, "N_grid": 4}"#,
            "phi",
        ),
        (r#"{"mode": "simulate", "bogus": 1}"#, "bogus"),
        (r#"{"T": 1}"#, "mode"),
        (
            r#"{"mode": "convergence", "mu0": [[0, 1]], "pvf": {"kind": "barycenter_split"}, "T": 1, "N_grid": [4, 8]}"#,
            "convergence",
        ),
    ] {
        let (output, _) = run_config(dir.path(), body, "x");
        assert_eq!(output.status.code(), Some(2), "{body}: {output:?}");
        let stderr = String::from_utf8_lossy(&output.stderr);
        assert!(stderr.contains(field), "{body}: {stderr}");
    }
    let missing = mde(&["--config", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn coarse_grids_exit_with_three_and_suggest_a_grid() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"mode": "simulate", "mu0": [[1.5, 1]], "pvf": {"kind": "barycenter_split"},
                   "T": 4, "N_grid": 2}"#;
    let (output, _) = run_config(dir.path(), body, "x");
    assert_eq!(output.status.code(), Some(3), "{output:?}");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("smallest admissible N is"), "{stderr}");
}

#[test]
fn config_fuzz_seeds_parse_without_panicking() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/parse_config");
    let mut parsed = 0;
    for entry in fs::read_dir(corpus).unwrap() {
        let bytes = fs::read(entry.unwrap().path()).unwrap();
        if let Ok(text) = std::str::from_utf8(&bytes) {
            if let Ok(config) = parse_config(text) {
                let _ = config.model();
                parsed += 1;
            }
        }
    }
    assert!(parsed > 0);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let config = parse_config(&fs::read_to_string(&path).unwrap()).unwrap();
        config
            .model()
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        config.grids().unwrap();
        config.t_final().unwrap();
    }
}

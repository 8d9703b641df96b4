use std::path::Path;
use std::process::{Command, Output};

use oscrit::cli::config::RunConfig;
use oscrit::SystemSpec;
use serde_json::Value;

fn oscrit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscrit"))
        .args(args)
        .env_clear()
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_config(dir: &Path, name: &str, cfg: &RunConfig) -> String {
    let path = dir.join(name);
    std::fs::write(&path, cfg.to_json()).unwrap();
    path.display().to_string()
}

fn nonosc_config() -> RunConfig {
    RunConfig {
        system: SystemSpec::nonoscillating_example(),
        ..RunConfig::default()
    }
}

#[test]
fn check_criteria_reports_verdict() {
    let out = oscrit(&["check-criteria"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["criteria"]["verdict"], "AllOscillate");
    assert_eq!(r["criteria"]["I1"]["kind"], "Divergent");
}

#[test]
fn hypothesis_violation_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.system.lambda1 = 0.5;
    cfg.system.lambda2 = 1.5;
    let path = write_config(dir.path(), "bad.json", &cfg);
    let out = oscrit(&["--config", &path, "check-criteria"]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(&out);
    assert_eq!(r["hypothesis_ok"], false);
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"sim\": {\"t_end\": 3.0, \"unknown\": 1}}").unwrap();
    let out = oscrit(&["--config", path.to_str().unwrap(), "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["error"]["kind"], "Config");
    let out = oscrit(&["--config", "/nonexistent/oscrit.json", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_example_and_bad_arguments_exit_two() {
    assert_eq!(oscrit(&["reproduce-example", "3"]).status.code(), Some(2));
    assert_eq!(oscrit(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(oscrit(&[]).status.code(), Some(2));
}

#[test]
fn dump_defaults_round_trips() {
    let out = oscrit(&["--dump-defaults"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(RunConfig::from_json(&text).unwrap(), RunConfig::default());
}

#[test]
fn simulate_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("traj.csv");
    let out = oscrit(&["--csv", csv_path.to_str().unwrap(), "simulate"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["status"]["kind"], "BlowUp");
    assert_eq!(r["classification"], "Indeterminate");

    let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["t", "x1", "x1_d1", "x2", "x2_d1"]);
    let rows: Vec<Vec<f64>> = rdr
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(
        rows.len(),
        r["accepted_steps"].as_u64().unwrap() as usize + 1
    );
    assert_eq!(rows[0], vec![0.0, 1.0, 0.0, 1.0, 0.0]);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
}

#[test]
fn simulate_is_deterministic() {
    let a = oscrit(&["simulate"]);
    let b = oscrit(&["simulate"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn zero_initial_state_is_improper() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.sim.x1_derivs = vec![0.0, 0.0];
    cfg.sim.x2_derivs = vec![0.0, 0.0];
    let path = write_config(dir.path(), "zero.json", &cfg);
    let out = oscrit(&["--config", &path, "simulate"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["classification"], "Improper");
}

#[test]
fn wrong_initial_dimension_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.sim.x1_derivs = vec![1.0];
    let path = write_config(dir.path(), "dim.json", &cfg);
    assert_eq!(
        oscrit(&["--config", &path, "simulate"]).status.code(),
        Some(2)
    );
}

#[test]
fn construct_nonosc_succeeds_and_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "nonosc.json", &nonosc_config());
    let csv_path = dir.path().join("grid.csv");
    let out = oscrit(&[
        "--config",
        &path,
        "--csv",
        csv_path.to_str().unwrap(),
        "construct-nonosc",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let p = r["P"].as_f64().unwrap();
    assert!((p * 8748.0 - 1.0).abs() < 1e-8);
    assert_eq!(r["verification"]["passed"], true);
    assert_eq!(r["initial_state"]["x1_derivs"].as_array().unwrap().len(), 2);
    let rows = csv::Reader::from_path(&csv_path).unwrap().records().count();
    assert_eq!(rows, r["grid_points"].as_u64().unwrap() as usize);
}

#[test]
fn construct_nonosc_gate_and_degenerate_exit_three() {
    assert_eq!(oscrit(&["construct-nonosc"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = nonosc_config();
    cfg.system.a1 = oscrit::CoefFn::zero();
    let path = write_config(dir.path(), "degenerate.json", &cfg);
    let out = oscrit(&["--config", &path, "construct-nonosc"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(report(&out)["error"]["kind"], "DegenerateP");
}

#[test]
fn nonconvergence_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = nonosc_config();
    cfg.fixed_point.max_iter = 1;
    cfg.fixed_point.fp_tol = 1e-14;
    let path = write_config(dir.path(), "short.json", &cfg);
    let out = oscrit(&["--config", &path, "construct-nonosc"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(report(&out)["error"]["kind"], "NonConvergence");
}

#[test]
fn reproduce_examples_exit_zero() {
    for case in ["1", "2"] {
        let out = oscrit(&["reproduce-example", case]);
        assert_eq!(out.status.code(), Some(0), "case {case}");
        let r = report(&out);
        assert_eq!(r["reproduced"], true);
        assert_eq!(r["criteria"]["verdict"], "AllOscillate");
    }
}

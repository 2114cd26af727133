use std::fs;
use std::process::Command;

use condensa::formats::read_trajectory_csv;
use condensa_core::engine::Mode;
use condensa_core::trajectory::{self, CheckpointSchedule, SimulationConfig};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_condensa"));
    c.env_remove("CONDENSA_WORKERS");
    c
}

fn run_ok(args: &[&str]) -> Vec<u8> {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

#[test]
fn malformed_exponent_is_a_usage_error() {
    for g in ["0/0", "-1", "abc", "1/0"] {
        let out = bin().args(["simulate", "--gamma", g, "--n", "10"]).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "gamma {g}");
    }
    let out = bin().args(["simulate", "--gamma", "5/4", "--n", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["oracle", "--gamma", "5/4", "--n", "8"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn coefficient_document_schema() {
    let v: Value = serde_json::from_slice(&run_ok(&["coeffs", "--gamma", "5/4"])).unwrap();
    assert_eq!(v["A"], 5);
    assert_eq!(v["critical_is_integer"], true);
    assert_eq!(v["two_star"], 3);
    assert_eq!(v["kstar"]["3"], 4);
    assert!((v["a"][1].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-15);
    assert!((v["b"].as_f64().unwrap() - 566.6211).abs() < 1e-3);
    assert!(v["c"]["3,4"].is_number());
    let z2 = v["drift_polynomials"]["Z_2"].as_array().unwrap();
    assert_eq!(z2[0]["exponent"], "3/4");
    assert_eq!(z2[0]["is_log"], false);

    let v: Value = serde_json::from_slice(&run_ok(&["coeffs", "--gamma", "3"])).unwrap();
    assert_eq!(v["A"], 1);
    assert!(v["c"].as_object().unwrap().is_empty());
}

#[test]
fn outputs_are_byte_identical_across_runs_and_workers() {
    let sim = ["simulate", "--gamma", "5/4", "--n", "20000", "--seed", "3", "--mode", "tracked", "--track"];
    assert_eq!(run_ok(&sim), run_ok(&sim));
    let ens = |w: &str| {
        let mut c = bin();
        c.args(["ensemble", "--gamma", "3/2", "--n", "5000", "--replicas", "6", "--seed", "11"]);
        c.env("CONDENSA_WORKERS", w);
        let out = c.output().unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(ens("1"), ens("3"));
}

#[test]
fn workers_variable_overrides_flag() {
    let out = bin()
        .env("CONDENSA_WORKERS", "0")
        .args(["--workers", "2", "coeffs", "--gamma", "5/4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn trajectory_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    run_ok(&[
        "simulate", "--gamma", "4/3", "--n", "30000", "--seed", "8", "--mode", "tracked", "--k-report", "6", "--track",
        "--checkpoints", "12345", "--out", path.to_str().unwrap(),
    ]);
    let read = read_trajectory_csv(fs::File::open(&path).unwrap()).unwrap();
    let mut c = SimulationConfig::new("4/3".parse().unwrap(), 30_000, 8);
    c.mode = Mode::Tracked;
    c.k_report = 6;
    c.k_track = Some(condensa_core::martingale::default_k_track(&c.gamma));
    c.schedule = CheckpointSchedule::default().with_points([12_345]);
    let direct = trajectory::run(&c).unwrap();
    assert_eq!(read, direct.checkpoints);
}

#[test]
fn ensemble_summary_and_oracle_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.json");
    run_ok(&[
        "ensemble", "--gamma", "5/4", "--n", "2000", "--replicas", "8", "--out", dir.path().join("e.csv").to_str().unwrap(),
        "--summary", summary.to_str().unwrap(),
    ]);
    let v: Value = serde_json::from_slice(&fs::read(&summary).unwrap()).unwrap();
    assert_eq!(v["R"], 8);
    assert_eq!(v["targets"].as_array().unwrap().len(), 7);

    let v: Value = serde_json::from_slice(&run_ok(&["oracle", "--gamma", "2", "--n", "4", "--replicas", "20000"])).unwrap();
    assert!((v["total_probability"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["comparison"]["pass"], true);
}

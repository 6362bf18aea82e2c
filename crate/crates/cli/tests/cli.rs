use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn rmcf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmcf"))
        .args(args)
        .arg("--set")
        .arg(format!("out_dir={}", dir.display()))
        .env_remove("RMCF_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = rmcf(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

#[test]
fn spectrum_rows() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["spectrum", "--set", "J_max=5"]);
    let text = read(dir.path(), "spectrum.csv");
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[3], "2,1,1,2,3");

    ok(dir.path(), &["spectrum", "--set", "n=2", "--set", "J_max=3"]);
    let text = read(dir.path(), "spectrum.csv");
    let row: Vec<&str> = text.lines().nth(3).unwrap().split(',').collect();
    assert_eq!((row[1], row[2], row[3]), ("1", "2", "5"));
}

#[test]
fn zero_amplitude_evolve() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["evolve", "--set", "amplitude=0", "--set", "s_end=1", "--set", "stride=100"]);
    assert_eq!(read(dir.path(), "rates.csv").lines().count(), 1);
    let traj = read(dir.path(), "trajectory.jsonl");
    let records: Vec<Value> = traj.lines().skip(1).map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 11);
    for r in records {
        assert!(r["coefficients"].as_array().unwrap().iter().all(|c| c.as_f64() == Some(0.0)));
    }
}

#[test]
fn small_mode_decays_at_its_eigenvalue() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["evolve"]);
    let text = read(dir.path(), "rates.csv");
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let row = reader.records().next().unwrap().unwrap();
    assert_eq!(&row[0], "2");
    let rate: f64 = row[3].parse().unwrap();
    assert!((rate - 1.0).abs() < 1e-3, "{rate}");
}

#[test]
fn escape_has_its_own_exit_code() {
    let dir = TempDir::new().unwrap();
    let amplitude = 0.9 * 2f64.sqrt();
    let out = rmcf(dir.path(), &["evolve", "--set", &format!("amplitude={amplitude}")]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("escape"));
    // Samples up to the escape are kept.
    assert!(read(dir.path(), "trajectory.jsonl").lines().count() > 2);
}

#[test]
fn usage_and_io_errors() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["evolve", "--set", "bogus=1"][..],
        &["spectrum", "--set", "n=0"],
        &["construct", "--set", "k=1"],
        &["construct", "--set", "b=[1, 2, 3]"],
        &["frobnicate"],
    ] {
        assert_eq!(code(&rmcf(dir.path(), args)), 2, "{args:?}");
    }
    let missing = dir.path().join("missing.jsonl");
    let out = rmcf(dir.path(), &["arrival", "--trajectory", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 4);
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"kind\": \"header\"}\n").unwrap();
    let out = rmcf(dir.path(), &["arrival", "--trajectory", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 4);
}

#[test]
fn trivial_construction() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["construct", "--set", "b=[0, 0]"]);
    let report = json(dir.path(), "construct.json");
    assert_eq!(report["converged"], Value::Bool(true));
    assert_eq!(report["shift"], 0.0);
    assert!(report["report"].is_null());
}

#[test]
fn construction_and_arrival_for_cos_two_theta() {
    let dir = TempDir::new().unwrap();
    let b0 = 1e-3 * (PI * 2f64.sqrt()).sqrt();
    ok(dir.path(), &["construct", "--set", &format!("b=[{b0}, 0]")]);
    let report = json(dir.path(), "construct.json");
    assert_eq!(report["converged"], Value::Bool(true));
    assert!(report["residual"].as_f64().unwrap() < 1e-6);
    assert!(report["note"].is_null());

    let traj = dir.path().join("trajectory.jsonl");
    ok(dir.path(), &["arrival", "--trajectory", traj.to_str().unwrap()]);
    let arrival = json(dir.path(), "arrival.json");
    assert_eq!(arrival["exact_ball"], Value::Bool(false));
    let gamma = arrival["fit"]["gamma"].as_f64().unwrap();
    assert!((gamma - 4.0).abs() < 0.08, "{gamma}");
    assert!(arrival["levelset"]["median"].as_f64().unwrap() < 5e-3);
    let samples = read(dir.path(), "arrival_samples.csv");
    assert!(samples.starts_with("direction,s,t,x0,x1,residual\n"));
}

#[test]
fn oversized_target_is_rescaled() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["construct", "--set", "J_max=16", "--set", "amplitude=2"]);
    let report = json(dir.path(), "construct.json");
    assert!(report["shift"].as_f64().unwrap() > 0.0);
    assert!(report["note"].as_str().unwrap().contains("s0 ="));
}

#[test]
fn arrival_on_the_round_sphere() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["evolve", "--set", "amplitude=0", "--set", "stride=20", "--set", "s_end=6"]);
    let traj = dir.path().join("trajectory.jsonl");
    ok(dir.path(), &["arrival", "--trajectory", traj.to_str().unwrap()]);
    let arrival = json(dir.path(), "arrival.json");
    assert_eq!(arrival["exact_ball"], Value::Bool(true));
    assert!(arrival["fit"].is_null());
    assert_eq!(read(dir.path(), "arrival_fit.csv").lines().count(), 1);
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["evolve", "--set", "noise=1e-6", "--set", "seed=7", "--set", "s_end=2"];
    ok(a.path(), &args);
    ok(b.path(), &args);
    for name in ["trajectory.jsonl", "rates.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    for dir in [&a, &b] {
        ok(dir.path(), &["construct", "--set", "amplitude=1e-3"]);
        let traj = dir.path().join("trajectory.jsonl");
        ok(dir.path(), &["arrival", "--trajectory", traj.to_str().unwrap()]);
    }
    for name in ["construct.json", "trajectory.jsonl", "arrival.json", "arrival_samples.csv", "arrival_fit.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }

    let (c, d) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    ok(c.path(), &args);
    ok(d.path(), &["evolve", "--set", "noise=1e-6", "--set", "seed=8", "--set", "s_end=2"]);
    assert_ne!(read(c.path(), "trajectory.jsonl"), read(d.path(), "trajectory.jsonl"));
}

#[test]
fn config_file_env_and_overrides() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("run.json");
    std::fs::write(&file, r#"{"n": 2, "J_max": 4}"#).unwrap();
    let env_dir = dir.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_rmcf"))
        .args(["spectrum", "--config", file.to_str().unwrap(), "--set", "J_max=6"])
        .env("RMCF_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    // n from the file, J_max from the override, directory from the environment.
    let text = std::fs::read_to_string(env_dir.join("spectrum.csv")).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().nth(3).unwrap().starts_with("2,1,2,"));
}

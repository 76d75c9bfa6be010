//! End-to-end checks of the binary: exit codes, output schema, format
//! selection, and configuration precedence.

use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kaczero"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).expect("valid JSON on stdout")
}

#[test]
fn selftest_passes_with_schema() {
    let out = run(&["selftest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "selftest");
    assert_eq!(v["passed"], true);
    assert!(v["suites"].as_array().unwrap().len() >= 5);
    for suite in v["suites"].as_array().unwrap() {
        assert!(suite["seconds"].as_f64().unwrap() < 60.0);
    }
}

#[test]
fn forced_failure_exits_one() {
    let out = run(&["selftest", "--fail", "schur"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    let schur = v["suites"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["name"] == "schur")
        .unwrap();
    assert_eq!(schur["passed"], false);
}

#[test]
fn usage_errors_exit_two() {
    // missing mandatory seed for a simulation command
    let out = run(&["simulate", "--n", "10", "--paths", "40"]);
    assert_eq!(out.status.code(), Some(2));
    // unknown model
    let out = run(&["simulate", "--seed", "1", "--model", "brownian"]);
    assert_eq!(out.status.code(), Some(2));
    // unknown flag (handled by the parser)
    let out = run(&["gamma", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    // bad config key
    let dir = std::env::temp_dir();
    let cfg = dir.join("kaczero_bad_cfg.txt");
    std::fs::write(&cfg, "frobnicate=1\n").unwrap();
    let out = run(&["gamma", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gamma_first_order_matches_closed_form() {
    let out = run(&["gamma", "--p-max", "1"]);
    assert!(out.status.success());
    let v = json_of(&out);
    let value = v["entries"][0]["value"].as_f64().unwrap();
    let target = 1.0 / (std::f64::consts::PI * 3.0_f64.sqrt());
    assert!((value - target).abs() < 1e-12, "{value} vs {target}");
}

#[test]
fn kac_density_single_node() {
    let out = run(&["kac-density", "--nodes", "0.0", "--seed", "0"]);
    assert!(out.status.success());
    let v = json_of(&out);
    let value = v["rho"]["value"].as_f64().unwrap();
    let target = 1.0 / (std::f64::consts::PI * 3.0_f64.sqrt());
    assert!((value - target).abs() < 1e-6, "{value} vs {target}");
    // two-point call also carries the cumulant block
    let out = run(&[
        "kac-density",
        "--nodes",
        "0.0, 1.5",
        "--seed",
        "0",
        "--mc-samples",
        "20000",
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert!(v["cumulant"]["value"].is_number());
}

#[test]
fn csv_output_is_rfc4180() {
    let out = run(&["gamma", "--p-max", "1", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.split("\r\n");
    assert_eq!(
        lines.next().unwrap(),
        "p,gamma,gamma_error,k,integral,integral_error"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert!(row[1].parse::<f64>().is_ok());
}

#[test]
fn config_file_yields_to_flags() {
    let dir = std::env::temp_dir();
    let cfg = dir.join("kaczero_cfg.txt");
    std::fs::write(&cfg, "# comment\nn = 30\npaths = 40\nseed = 9\n").unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap(), "--n", "12"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    // flag n=12 beats the file's n=30; the file supplies seed and paths
    assert_eq!(v["parameter"].as_f64().unwrap(), 12.0);
    assert_eq!(v["paths"], 40);
    assert_eq!(v["seed"], 9);
}

#[test]
fn simulate_is_deterministic_in_seed() {
    let args = ["simulate", "--n", "10", "--paths", "60", "--seed", "4"];
    let a = json_of(&run(&args));
    let b = json_of(&run(&args));
    assert_eq!(a["cumulants"], b["cumulants"]);
    let c = json_of(&run(&[
        "simulate", "--n", "10", "--paths", "60", "--seed", "5",
    ]));
    assert_ne!(a["cumulants"], c["cumulants"]);
}

#[test]
fn output_file_written() {
    let path: PathBuf = std::env::temp_dir().join("kaczero_gamma_out.json");
    let _ = std::fs::remove_file(&path);
    let out = run(&["gamma", "--p-max", "1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
}

#[test]
fn clt_check_reports_moments() {
    let out = run(&[
        "clt-check",
        "--n",
        "6",
        "--paths",
        "1000",
        "--seed",
        "3",
        "--p-max",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let moments = v["moments"].as_array().unwrap();
    assert_eq!(moments.len(), 5);
    assert_eq!(moments[0]["order"], 2);
    assert!(v["predicted_mean"].as_f64().unwrap() > 0.0);
    // mean count of a degree-6 polynomial: exact value 2 sqrt(5 * 11 / 6)
    let mean = v["mean"].as_f64().unwrap();
    assert!((mean - 6.055).abs() < 0.5, "mean {mean}");
}

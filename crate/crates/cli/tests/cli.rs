use std::process::{Command, Output};

use serde_json::Value;

fn urnlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_urnlab")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn urn_sim_two_draws() {
    let out = urnlab(&[
        "urn-sim",
        "--side",
        "zero",
        "--alpha",
        "1",
        "--n",
        "2",
        "--replicas",
        "1000000",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["schema_version"], 1);
    let pmf = r["results"]["pmf"].as_array().unwrap();
    let zero = pmf.iter().find(|p| p["discrepancy"] == 0).unwrap();
    let (p, se) = (zero["probability"].as_f64().unwrap(), zero["stderr"].as_f64().unwrap());
    assert!((p - 0.75).abs() <= 3.0 * se, "{p} +- {se}");
    assert_eq!(r["rng"]["streams_used"], 1_000_000);
}

#[test]
fn rubin_sampler_reports_ties() {
    let out = urnlab(&[
        "urn-sim",
        "--sampler",
        "rubin",
        "--n",
        "50",
        "--replicas",
        "100",
        "--seed",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["rng"]["rubin_ties"].is_u64());
}

#[test]
fn series_ratio() {
    let out = urnlab(&["series", "--alpha", "1", "--n", "1000000"]);
    assert_eq!(out.status.code(), Some(0));
    let ratio = json(&out)["results"]["ratio"].as_f64().unwrap();
    assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(urnlab(&["verify"]).status.code(), Some(2));
    assert_eq!(urnlab(&["urn-sim", "--side", "left"]).status.code(), Some(2));
    assert_eq!(urnlab(&["urn-sim", "--replicas", "0"]).status.code(), Some(2));
    assert_eq!(urnlab(&["bogus"]).status.code(), Some(2));
}

#[test]
fn oracle_cap_is_reported() {
    let out = urnlab(&["oracle", "--n", "20000"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(r["pass"], false);
    assert!(r["errors"][0].as_str().unwrap().contains("cap"));
}

#[test]
fn oracle_csv_carries_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("law.csv");
    let p = path.to_str().unwrap();
    let out = urnlab(&[
        "oracle", "--stop", "tau", "--n", "32", "--side", "plus", "--format", "csv", "--out", p,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# "));
    assert!(text.contains("# config_hash="));
    assert!(text.contains("state_blues,state_reds,probability"));
    let total: f64 = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("state"))
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-10);
}

#[test]
fn walk_sim_dumps_path_and_local_times() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("walk.csv");
    let p = path.to_str().unwrap();
    let out = urnlab(&[
        "walk-sim", "--mode", "urn", "--n", "500", "--seed", "5", "--format", "csv", "--out", p,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let walk = std::fs::read_to_string(&path).unwrap();
    assert_eq!(walk.lines().filter(|l| !l.starts_with('#')).count(), 502);
    let local = std::fs::read_to_string(dir.path().join("walk.local_times.csv")).unwrap();
    let total: u64 = local
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("site"))
        .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 500);
}

#[test]
fn quick_verify_is_thread_invariant() {
    let strip = |o: &Output| {
        let mut v = json(o);
        v.as_object_mut().unwrap().remove("wall_clock_seconds");
        v
    };
    let a = urnlab(&["verify", "--seed", "3", "--profile", "quick", "--threads", "1"]);
    let b = urnlab(&["verify", "--seed", "3", "--profile", "quick", "--threads", "4"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(strip(&a), strip(&b));
    let checks = strip(&a)["results"]["checks"].as_array().unwrap().len();
    assert_eq!(checks, urnlab_cli::verify::Check::ALL.len());
}

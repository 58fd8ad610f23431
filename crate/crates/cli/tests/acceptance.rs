//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p urnlab-cli --test acceptance`.

use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;
use urnlab::checks::{self, DriftSweep, Tolerances};
use urnlab::{exact_after_n, MonteCarlo, Side, TheoremVerdict, UrnSpec, WeightFunction};
use urnlab_cli::verify::{srw_degeneration, tail_calibration};

const ALPHAS: [f64; 3] = [0.5, 1.0, 2.0];
const BEES: [f64; 2] = [0.0, 0.3];
const SEED: u64 = 20240607;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn perturbed(alpha: f64, bee: f64) -> WeightFunction {
    WeightFunction::perturbed(alpha, bee).expect("valid weights")
}

fn grid() -> Vec<WeightFunction> {
    ALPHAS.iter().flat_map(|&a| BEES.map(|b| perturbed(a, b))).collect()
}

fn label(spec: &UrnSpec) -> String {
    format!("{} a={} B={}", spec.side, spec.wf.alpha(), spec.wf.bee())
}

/// Collect failing verdicts; `Ok(summary)` when all pass.
fn judge(verdicts: &[(String, TheoremVerdict)], summary: String) -> Outcome {
    let failed: Vec<String> = verdicts
        .iter()
        .filter(|(_, v)| !v.pass)
        .map(|(what, v)| {
            format!(
                "{what}: observed {} target {} tol {}",
                v.observed, v.target_value, v.tolerance
            )
        })
        .collect();
    if failed.is_empty() {
        Ok(summary)
    } else {
        Err(failed.join("; "))
    }
}

fn within(elapsed: Duration, limit: Duration, outcome: Outcome) -> Outcome {
    let note = format!("{:.1}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs());
    match outcome {
        Ok(s) if elapsed <= limit => Ok(format!("{s}; {note}")),
        Ok(s) => Err(format!("{s}; too slow: {note}")),
        Err(e) => Err(format!("{e}; {note}")),
    }
}

fn c01_toth() -> Outcome {
    let start = Instant::now();
    let mut verdicts = Vec::new();
    let mut worst: f64 = 0.0;
    for side in Side::ALL {
        for wf in grid() {
            for n in [1, 2, 3, 4, 5, 6, 7, 8, 64, 256] {
                let spec = UrnSpec::new(side, wf.clone());
                let v = checks::check_toth(&spec, n, 1e-10).map_err(|e| e.to_string())?;
                worst = worst.max(v.tolerance / v.target_value.abs().max(1.0));
                verdicts.push((format!("{} n={n}", label(&spec)), v));
            }
        }
    }
    let summary = format!("{} cases, worst relative bound {worst:.2e}", verdicts.len());
    within(start.elapsed(), Duration::from_secs(10), judge(&verdicts, summary))
}

fn c02_srw() -> Outcome {
    let v = srw_degeneration().map_err(|e| e.to_string())?;
    judge(
        &[("srw".into(), v.clone())],
        format!("max |error| {:.1e}, P(|D_2|>=2) = 1/2", v.observed),
    )
}

fn c03_var_limit() -> Outcome {
    let start = Instant::now();
    let tol = Tolerances::default();
    let mut verdicts = Vec::new();
    let mut worst: f64 = 0.0;
    for side in Side::ALL {
        for wf in grid() {
            let spec = UrnSpec::new(side, wf);
            let v = checks::check_var_limit(&spec, &[1024, 2048, 4096], &tol).map_err(|e| e.to_string())?;
            worst = worst.max((v.observed - v.target_value).abs() / v.target_value);
            verdicts.push((label(&spec), v));
        }
    }
    let summary = format!("{} cases, worst relative error at 4096 {worst:.2e}", verdicts.len());
    within(start.elapsed(), Duration::from_secs(120), judge(&verdicts, summary))
}

fn c04_var_at_tau() -> Outcome {
    let tol = Tolerances::default();
    let mc = MonteCarlo::new(SEED, 1);
    let mut verdicts = Vec::new();
    let mut worst: f64 = 0.0;
    for side in Side::ALL {
        for &alpha in &ALPHAS {
            let spec = UrnSpec::new(side, perturbed(alpha, 0.0));
            for n in [1024, 4096] {
                let v = checks::check_var_at_tau(&spec, n, 1, &mc, &tol).map_err(|e| e.to_string())?;
                if n == 4096 {
                    worst = worst.max((v.observed - v.target_value).abs() / v.target_value);
                    verdicts.push((format!("{} n={n}", label(&spec)), v));
                }
            }
        }
    }
    let spec = UrnSpec::new(Side::Zero, perturbed(1.0, 0.0));
    let cross = checks::cross_check_var_at_tau(&spec, 10_000, 10_000, &mc, &tol).map_err(|e| e.to_string())?;
    let cross_line = format!(
        "MC {:.4} vs DP {:.4} (3 stderr {:.4})",
        cross.observed, cross.target_value, cross.tolerance
    );
    verdicts.push(("mc vs dp n=10^4".into(), cross));
    judge(
        &verdicts,
        format!("worst relative error at 4096 {worst:.2e}; {cross_line}"),
    )
}

fn c05_mean_at_tau() -> Outcome {
    let tol = Tolerances::default();
    let grid = [256, 1024, 4096];
    let mut verdicts = Vec::new();
    let mut lines = Vec::new();
    let cases = [
        (Side::Plus, 1.0),
        (Side::Minus, 1.0),
        (Side::Zero, 1.0),
        (Side::Zero, 2.0),
    ];
    for (side, alpha) in cases {
        let wf = perturbed(alpha, 0.0);
        let v = checks::check_mean_at_tau(side, &wf, &grid, &tol).map_err(|e| e.to_string())?;
        lines.push(format!("{side} a={alpha}: {:.4} -> {:.4}", v.observed, v.target_value));
        verdicts.push((format!("{side} a={alpha}"), v));
    }
    judge(&verdicts, lines.join(", "))
}

fn c06_mean_scaled() -> Outcome {
    let mut verdicts = Vec::new();
    for side in Side::ALL {
        let v = checks::check_mean_scaled_at_tau(side, &perturbed(1.0, 0.0), &[256, 1024, 4096])
            .map_err(|e| e.to_string())?;
        verdicts.push((side.to_string(), v));
    }
    judge(&verdicts, "strictly decreasing for plus, minus, zero".into())
}

fn c07_series() -> Outcome {
    let start = Instant::now();
    let verdicts: Vec<_> = grid()
        .iter()
        .map(|wf| {
            (
                format!("a={} B={}", wf.alpha(), wf.bee()),
                checks::check_series(wf, 1_000_000, 0.01),
            )
        })
        .collect();
    let worst = verdicts
        .iter()
        .map(|(_, v)| (v.observed - 1.0).abs())
        .fold(0.0, f64::max);
    within(
        start.elapsed(),
        Duration::from_secs(1),
        judge(&verdicts, format!("worst |ratio - 1| {worst:.2e}")),
    )
}

fn c08_constructions() -> Outcome {
    let tol = Tolerances::default();
    let mc = MonteCarlo::new(SEED, 1);
    let mut verdicts = Vec::new();
    let mut worst: f64 = 0.0;
    for &alpha in &ALPHAS {
        let v = checks::check_walk_constructions(&perturbed(alpha, 0.0), 10).map_err(|e| e.to_string())?;
        worst = worst.max(v.observed);
        verdicts.push((format!("walk a={alpha}"), v));
    }
    let mut ps = Vec::new();
    for side in Side::ALL {
        let spec = UrnSpec::new(side, perturbed(1.0, 0.0));
        let (v, _) = checks::check_rubin_law(&spec, 6, 1_000_000, &mc, &tol).map_err(|e| e.to_string())?;
        ps.push(format!("{side} p={:.3}", v.observed));
        verdicts.push((format!("rubin {side}"), v));
    }
    judge(
        &verdicts,
        format!("walk max diff {worst:.1e}; chi-square {}", ps.join(", ")),
    )
}

fn c09_tails() -> Outcome {
    let spec = UrnSpec::new(Side::Zero, perturbed(1.0, 0.0));
    let dist = exact_after_n(&spec, 1024).map_err(|e| e.to_string())?;
    let tail = checks::check_tail_decay(&dist, 1024).map_err(|e| e.to_string())?;
    let srw = tail_calibration(1024).map_err(|e| e.to_string())?;
    let summary = format!("zero urn c_fit {:.3}; SRW c_fit {:.3}", tail.observed, srw.observed);
    judge(&[("zero urn".into(), tail), ("srw calibration".into(), srw)], summary)
}

fn c10_bridge() -> Outcome {
    let start = Instant::now();
    let tol = Tolerances::default();
    let mc = MonteCarlo::new(SEED, 1);
    let n = 10_000;
    let mut verdicts = Vec::new();
    let mut lines = Vec::new();
    for alpha in [0.5, 1.0] {
        let spec = UrnSpec::new(Side::Zero, perturbed(alpha, 0.0));
        let v =
            checks::check_variance_bridge(&spec, n, n, 2 * n, 1.0, 100_000, &mc, &tol).map_err(|e| e.to_string())?;
        lines.push(format!("a={alpha} ratio {:.4}", v.observed));
        verdicts.push((format!("a={alpha}"), v));
    }
    within(
        start.elapsed(),
        Duration::from_secs(300),
        judge(&verdicts, lines.join(", ")),
    )
}

fn c11_increment() -> Outcome {
    let tol = Tolerances::default();
    let mc = MonteCarlo::new(SEED, 1);
    let spec = UrnSpec::new(Side::Zero, perturbed(1.0, 0.0));
    let v = checks::check_var_increment(&spec, 10_000, 12_000, 100_000, &mc, &tol).map_err(|e| e.to_string())?;
    let summary = format!("Var(D_m - D_n)/(m - n) = {:.4}", v.observed);
    judge(&[("increment".into(), v)], summary)
}

fn c12_tau_vs_2n() -> Outcome {
    let tol = Tolerances::default();
    let mc = MonteCarlo::new(SEED, 1);
    let spec = UrnSpec::new(Side::Zero, perturbed(1.0, 0.0));
    let v = checks::check_tau_vs_2n(&spec, &[1024, 4096, 16384], 10_000, &mc, &tol).map_err(|e| e.to_string())?;
    let summary = format!("ratios {}, median {:.3}", v.details["ratios"], v.target_value);
    judge(&[("tau vs 2n".into(), v)], summary)
}

fn c13_sup_excursion() -> Outcome {
    let mc = MonteCarlo::new(SEED, 1);
    let spec = UrnSpec::new(Side::Zero, perturbed(1.0, 0.0));
    let v =
        checks::check_sup_excursion(&spec, 300, 1000, &[0.5, 1.0, 1.5, 2.0], 10_000, &mc).map_err(|e| e.to_string())?;
    let probs: Vec<String> = v.details["curve"]
        .as_array()
        .map(|c| {
            c.iter()
                .map(|p| format!("{:.4}", p["probability"].as_f64().unwrap_or(f64::NAN)))
                .collect()
        })
        .unwrap_or_default();
    let summary = format!("P = [{}], fitted c {:.3}", probs.join(", "), v.observed);
    judge(&[("sup excursion".into(), v)], summary)
}

fn c14_drift() -> Outcome {
    let tol = Tolerances::default();
    let sweep = DriftSweep::default();
    let mut families = grid();
    families.extend(ALPHAS.iter().map(|&a| WeightFunction::specific(a).expect("valid")));
    families.push(WeightFunction::table(vec![1.0, 0.7, 0.4, 0.3], 1.0, 0.3).expect("valid"));
    families.push(WeightFunction::constant());
    let mut verdicts = Vec::new();
    for side in Side::ALL {
        for wf in &families {
            let spec = UrnSpec::new(side, wf.clone());
            let v = checks::check_drift_bound(&spec, &sweep, &tol).map_err(|e| e.to_string())?;
            verdicts.push((format!("{} {}", label(&spec), wf.family()), v));
        }
    }
    let worst = verdicts
        .iter()
        .filter(|(_, v)| v.target_value > 1e-6)
        .map(|(_, v)| v.observed / v.target_value)
        .fold(0.0, f64::max);
    judge(
        &verdicts,
        format!("{} cases, worst decade/first-decade ratio {worst:.3}", verdicts.len()),
    )
}

fn c15_determinism() -> Outcome {
    let run = |threads: &str| -> Result<Value, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_urnlab"))
            .args(["verify", "--seed", "7", "--threads", threads])
            .output()
            .map_err(|e| e.to_string())?;
        let mut v: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
        v.as_object_mut().map(|o| o.remove("wall_clock_seconds"));
        Ok(v)
    };
    let (one, eight) = (run("1")?, run("8")?);
    let (a, b) = (
        serde_json::to_string_pretty(&one).unwrap_or_default(),
        serde_json::to_string_pretty(&eight).unwrap_or_default(),
    );
    if a != b {
        return Err("reports differ between 1 and 8 threads".into());
    }
    let verdicts = one["verdicts"].as_array().map_or(0, Vec::len);
    Ok(format!(
        "{} bytes identical, {verdicts} verdicts, report pass = {}",
        a.len(),
        one["pass"]
    ))
}

fn main() {
    let criteria: [Criterion; 15] = [
        ("toth identity", c01_toth),
        ("srw degeneration", c02_srw),
        ("variance limit after n draws", c03_var_limit),
        ("variance limit at the n-th blue", c04_var_at_tau),
        ("mean at the n-th blue", c05_mean_at_tau),
        ("scaled mean at the n-th blue", c06_mean_scaled),
        ("odd/even series", c07_series),
        ("construction equivalences", c08_constructions),
        ("tail decay", c09_tails),
        ("variance bridge", c10_bridge),
        ("increment variance", c11_increment),
        ("tau_n vs 2n coupling", c12_tau_vs_2n),
        ("sup excursion", c13_sup_excursion),
        ("drift bound", c14_drift),
        ("determinism", c15_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("{:02}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|x| x == &id || name.contains(x.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(s) => println!("PASS {id} {name} [{secs:.1}s]: {s}"),
            Err(e) => {
                failures += 1;
                println!("FAIL {id} {name} [{secs:.1}s]: {e}");
            }
        }
    }
    println!("acceptance: {failures} failing");
    if failures > 0 {
        std::process::exit(1);
    }
}

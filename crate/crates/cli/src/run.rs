//! Command execution.

use std::collections::BTreeMap;
use std::time::Instant;

use serde_json::json;
use urnlab::checks::check_series;
use urnlab::oracle::exact_at_tau_blue;
use urnlab::rng::{derive_seed, RngStream};
use urnlab::urn::{RubinUrn, SequentialUrn, UrnRates, UrnSampler};
use urnlab::walk::simulate_walk;
use urnlab::weights::odd_even_asymptote;
use urnlab::{exact_after_n, streaming_moments, LatticeDistribution, MonteCarlo, UrnSpec};

use crate::config::{Command, ExperimentConfig, Format, Sampler, Stop};
use crate::report::RunReport;
use crate::verify::{Check, Context};

/// A CSV file produced alongside (or instead of) the JSON report.
#[derive(Debug, Clone)]
pub struct CsvArtifact {
    /// Appended to the output file stem; `None` for the primary output.
    pub suffix: Option<&'static str>,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub csv: Vec<CsvArtifact>,
}

impl Outcome {
    /// Main output in the configured format.
    pub fn primary(&self, format: Format) -> String {
        match format {
            Format::Json => self.report.to_json(),
            Format::Csv => self
                .csv
                .iter()
                .find(|a| a.suffix.is_none())
                .map(|a| a.contents.clone())
                .unwrap_or_else(|| self.report.verdicts_csv()),
        }
    }
}

fn csv_header(config: &ExperimentConfig) -> String {
    format!(
        "# config_hash={}\n# command={}\n",
        config.hash(),
        serde_json::to_value(config.command)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    )
}

pub fn run(config: &ExperimentConfig) -> Outcome {
    let start = Instant::now();
    let mut report = RunReport::new(config);
    let mut csv = Vec::new();
    match config.command {
        Command::UrnSim => urn_sim(config, &mut report, &mut csv),
        Command::WalkSim => walk_sim(config, &mut report, &mut csv),
        Command::Oracle => oracle(config, &mut report, &mut csv),
        Command::Verify => verify(config, &mut report),
        Command::Series => series(config, &mut report, &mut csv),
    }
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Outcome { report, csv }
}

fn urn_sim(config: &ExperimentConfig, report: &mut RunReport, csv: &mut Vec<CsvArtifact>) {
    let spec = UrnSpec::new(config.side, config.weights.clone());
    let n = config.n;
    let draws = match config.stop {
        Stop::Draws => n,
        Stop::Tau => 2 * n,
    };
    let rates = UrnRates::new(&spec, (draws / 2 + 10 * (draws as f64).sqrt() as u64 + 64) as usize);
    let mc = MonteCarlo::new(config.seed, config.threads);
    let stop = config.stop;
    let done = move |s: urnlab::UrnState| match stop {
        Stop::Draws => s.draws() >= n,
        Stop::Tau => s.blues >= n,
    };
    let outcomes: Vec<(i64, u64)> = mc.run("urn-sim", config.replicas, |_, rng| match config.sampler {
        Sampler::Sequential => {
            let mut urn = SequentialUrn::new(&rates, rng);
            while !done(urn.state()) {
                urn.draw();
            }
            (urn.state().discrepancy(), 0)
        }
        Sampler::Rubin => {
            let mut urn = RubinUrn::new(&rates, rng);
            while !done(urn.state()) {
                urn.draw();
            }
            (urn.state().discrepancy(), urn.ties())
        }
    });
    report.rng.streams_used = mc.streams_used();
    report.rng.rubin_ties = outcomes.iter().map(|o| o.1).sum();
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for (d, _) in &outcomes {
        *counts.entry(*d).or_default() += 1;
    }
    let total = config.replicas as f64;
    let pmf: Vec<_> = counts
        .iter()
        .map(|(&d, &c)| {
            let p = c as f64 / total;
            (d, p, (p * (1.0 - p) / total).sqrt())
        })
        .collect();
    match streaming_moments(outcomes.iter().map(|o| o.0 as f64)) {
        Ok(s) => report.push_estimate("discrepancy", s),
        Err(e) if config.replicas < 2 => report.results = json!({ "note": e.to_string() }),
        Err(e) => report.push_error(e),
    }
    report.results = json!({
        "stop": config.stop,
        "n": n,
        "pmf": pmf.iter().map(|&(d, p, se)| json!({"discrepancy": d, "probability": p, "stderr": se})).collect::<Vec<_>>(),
    });
    let mut s = csv_header(config);
    s.push_str("discrepancy,probability,stderr\n");
    for (d, p, se) in pmf {
        s.push_str(&format!("{d},{p},{se}\n"));
    }
    csv.push(CsvArtifact {
        suffix: None,
        contents: s,
    });
}

fn walk_sim(config: &ExperimentConfig, report: &mut RunReport, csv: &mut Vec<CsvArtifact>) {
    let stream = RngStream::for_replica(derive_seed(config.seed, "walk-sim"), 0);
    let record = config.format == Format::Csv;
    let run = simulate_walk(&config.weights, config.mode, config.n, stream, record);
    report.rng.streams_used = match config.mode {
        urnlab::WalkMode::Direct => 1,
        urnlab::WalkMode::Urn => run.sites_created,
    };
    let (lo, times) = run.state.edge_local_times.span();
    report.results = json!({
        "steps": config.n,
        "mode": config.mode,
        "final_position": run.state.position,
        "leftmost_edge": lo,
        "edges_visited": times.iter().filter(|&&t| t > 0).count(),
        "max_local_time": times.iter().copied().max().unwrap_or(0),
        "total_local_time": run.state.total_local_time(),
        "sites_created": run.sites_created,
    });
    if record {
        let header = csv_header(config);
        let mut path = header.clone().into_bytes();
        let mut local = header.into_bytes();
        let ok = run.write_path_csv(&mut path).is_ok() && run.state.write_local_times_csv(&mut local).is_ok();
        if !ok {
            report.push_error("failed to render walk CSV");
        }
        csv.push(CsvArtifact {
            suffix: None,
            contents: String::from_utf8_lossy(&path).into_owned(),
        });
        csv.push(CsvArtifact {
            suffix: Some("local_times"),
            contents: String::from_utf8_lossy(&local).into_owned(),
        });
    }
}

fn oracle(config: &ExperimentConfig, report: &mut RunReport, csv: &mut Vec<CsvArtifact>) {
    let spec = UrnSpec::new(config.side, config.weights.clone());
    let tol = config.truncation_tol.unwrap_or(1e-12);
    let dist: urnlab::Result<LatticeDistribution> = match config.stop {
        Stop::Draws => exact_after_n(&spec, config.n),
        Stop::Tau => exact_at_tau_blue(&spec, config.n, tol),
    };
    let dist = match dist {
        Ok(d) => d,
        Err(e) => return report.push_error(e),
    };
    report.results = json!({
        "stop": config.stop,
        "n": config.n,
        "mean_discrepancy": dist.mean_discrepancy(),
        "variance_discrepancy": dist.variance_discrepancy(),
        "total_mass": dist.total_mass(),
        "residual": dist.residual(),
        "truncation_bound": dist.truncation_bound(),
        "pmf": dist.discrepancy_pmf().iter().map(|&(d, p)| json!({"discrepancy": d, "probability": p})).collect::<Vec<_>>(),
    });
    let mut out = Vec::new();
    let header = [
        ("config_hash", config.hash()),
        ("command", "oracle".to_owned()),
        ("side", config.side.to_string()),
        ("n", config.n.to_string()),
    ];
    if dist.write_csv(&mut out, &header).is_err() {
        report.push_error("failed to render oracle CSV");
    }
    csv.push(CsvArtifact {
        suffix: None,
        contents: String::from_utf8_lossy(&out).into_owned(),
    });
}

fn series(config: &ExperimentConfig, report: &mut RunReport, csv: &mut Vec<CsvArtifact>) {
    let v = check_series(&config.weights, config.n, config.tolerances.model_rel.min(0.01));
    let asymptote = odd_even_asymptote(config.weights.alpha(), config.n);
    let sum = v.details.get("sum").cloned().unwrap_or_default();
    report.results = json!({
        "n": config.n,
        "alpha": config.weights.alpha(),
        "sum": sum,
        "asymptote": asymptote,
        "ratio": v.observed,
    });
    csv.push(CsvArtifact {
        suffix: None,
        contents: format!(
            "{}n,sum,asymptote,ratio\n{},{},{},{}\n",
            csv_header(config),
            config.n,
            sum,
            asymptote,
            v.observed
        ),
    });
    report.push_verdict(v);
}

fn verify(config: &ExperimentConfig, report: &mut RunReport) {
    let ctx = Context::new(config);
    for check in Check::ALL {
        match ctx.run(check) {
            Ok(verdicts) => {
                for v in verdicts {
                    if let Some(t) = v.details.get("rubin_ties").and_then(|t| t.as_u64()) {
                        report.rng.rubin_ties += t;
                    }
                    report.push_verdict(v);
                }
            }
            Err(e) => {
                report.push_error(format!("{}: {e}", check.name()));
                report.push_verdict(
                    urnlab::TheoremVerdict::fit(check.name(), 0.0, f64::NAN)
                        .require("completed", false)
                        .detail("error", e.to_string()),
                );
            }
        }
    }
    report.rng.streams_used = ctx.mc.streams_used();
    report.results = json!({ "plan": ctx.plan, "checks": Check::ALL.iter().map(|c| c.name()).collect::<Vec<_>>() });
}

//! Command-line flags and the validated experiment configuration.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use urnlab::checks::Tolerances;
use urnlab::{Family, Side, WalkMode, WeightFunction};

#[derive(Debug, Parser)]
#[command(
    name = "urnlab",
    version,
    about = "Generalized Polya urn and self-repelling walk experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub args: Args,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Monte Carlo law of the discrepancy after `n` draws or at the n-th blue.
    UrnSim,
    /// Simulate one walk; CSV output dumps the path and edge local times.
    WalkSim,
    /// Exact law of the discrepancy by dynamic programming.
    Oracle,
    /// Run the full verification battery.
    Verify,
    /// Odd/even weight series against its asymptote.
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Acceptance-scale grids and replica counts.
    #[default]
    Full,
    /// Reduced sizes for smoke runs.
    Quick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stop {
    /// After `n` draws.
    #[default]
    Draws,
    /// At the n-th blue draw.
    Tau,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    #[default]
    Sequential,
    Rubin,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Args {
    /// Weight exponent.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Second-order weight coefficient.
    #[arg(long = "B", global = true, allow_negative_numbers = true)]
    pub bee: Option<f64>,
    /// specific | perturbed | table | constant
    #[arg(long, global = true)]
    pub family: Option<Family>,
    /// Override w(0) (perturbed family).
    #[arg(long, global = true)]
    pub w0: Option<f64>,
    /// Explicit leading weights, comma separated (table family).
    #[arg(long, global = true, value_delimiter = ',')]
    pub table: Option<Vec<f64>>,
    /// Urn side: plus | minus | zero
    #[arg(long, global = true)]
    pub side: Option<Side>,
    #[arg(long, global = true)]
    pub n: Option<u64>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub n_grid: Option<Vec<u64>>,
    #[arg(long, global = true)]
    pub replicas: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Relative model tolerance for verdicts; truncation tolerance for `oracle`.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output file, written atomically. Defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t)]
    pub format: Format,
    /// Walk construction: direct | urn
    #[arg(long, global = true)]
    pub mode: Option<WalkMode>,
    #[arg(long, global = true, value_enum, default_value_t)]
    pub profile: Profile,
    #[arg(long, global = true, value_enum, default_value_t)]
    pub stop: Stop,
    #[arg(long, global = true, value_enum, default_value_t)]
    pub sampler: Sampler,
    /// Bridge/increment lower time (defaults to n).
    #[arg(long, global = true)]
    pub k: Option<u64>,
    /// Bridge/increment upper time.
    #[arg(long, global = true)]
    pub m: Option<u64>,
    /// Bridge lower limit as a fraction of n.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub delta: f64,
    /// Block index for the sup-excursion check.
    #[arg(long = "M", global = true)]
    pub big_m: Option<u64>,
}

/// Invalid flag combinations; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Validated configuration. `threads`, `out` and `format` affect neither the
/// numbers nor the echo, so they are not serialized.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub weights: WeightFunction,
    /// Whether weight flags were given; `verify` otherwise sweeps its grid.
    pub weights_explicit: bool,
    pub side: Side,
    pub n: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<u64>>,
    pub replicas: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_tol: Option<f64>,
    pub tolerances: Tolerances,
    pub mode: WalkMode,
    pub profile: Profile,
    pub stop: Stop,
    pub sampler: Sampler,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    pub delta: f64,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub big_m: Option<u64>,
    #[serde(skip)]
    pub threads: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub format: Format,
}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

fn build_weights(args: &Args) -> Result<(WeightFunction, bool), UsageError> {
    let explicit = args.alpha.is_some()
        || args.bee.is_some()
        || args.family.is_some()
        || args.table.is_some()
        || args.w0.is_some();
    let family = args.family.unwrap_or(match (&args.table, args.bee) {
        (Some(_), _) => Family::Table,
        (None, Some(_)) => Family::Perturbed,
        (None, None) => Family::Specific,
    });
    let alpha = args.alpha.unwrap_or(1.0);
    let wf = match family {
        Family::Specific => {
            if args.bee.is_some() {
                return Err(usage(
                    "--B is fixed to alpha/2 by the specific family; use --family perturbed",
                ));
            }
            WeightFunction::specific(alpha)
        }
        Family::Perturbed => WeightFunction::perturbed(alpha, args.bee.unwrap_or(0.0)),
        Family::Table => {
            let values = args
                .table
                .clone()
                .ok_or_else(|| usage("--family table needs --table"))?;
            WeightFunction::table(values, alpha, args.bee.unwrap_or(0.0))
        }
        Family::Constant => {
            if args.alpha.is_some_and(|a| a != 0.0) || args.bee.is_some_and(|b| b != 0.0) {
                return Err(usage("the constant family has alpha = B = 0"));
            }
            Ok(WeightFunction::constant())
        }
    }
    .map_err(|e| usage(e.to_string()))?;
    let wf = match args.w0 {
        Some(w0) => wf.with_w0(w0).map_err(|e| usage(e.to_string()))?,
        None => wf,
    };
    Ok((wf, explicit))
}

impl ExperimentConfig {
    pub fn from_args(command: Command, args: &Args) -> Result<Self, UsageError> {
        let (weights, weights_explicit) = build_weights(args)?;
        if command == Command::Verify && args.seed.is_none() {
            return Err(usage("verify needs an explicit --seed"));
        }
        let default_n = match command {
            Command::Series => 1_000_000,
            Command::WalkSim => 10_000,
            _ => 100,
        };
        let n = args.n.unwrap_or(default_n);
        if n == 0 {
            return Err(usage("--n must be at least 1"));
        }
        let replicas = args.replicas.unwrap_or(10_000);
        if replicas == 0 {
            return Err(usage("--replicas must be at least 1"));
        }
        if let Some(grid) = &args.n_grid {
            if grid.is_empty() || grid.contains(&0) {
                return Err(usage("--n-grid entries must be at least 1"));
            }
        }
        let mut tolerances = Tolerances::default();
        let mut truncation_tol = None;
        if let Some(t) = args.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(usage("--tol must be positive"));
            }
            match command {
                Command::Oracle => truncation_tol = Some(t),
                _ => tolerances.model_rel = t,
            }
        }
        if !(args.delta > 0.0 && args.delta <= 2.0) {
            return Err(usage("--delta must lie in (0, 2]"));
        }
        if args.threads == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        Ok(Self {
            command,
            weights,
            weights_explicit,
            side: args.side.unwrap_or(Side::Zero),
            n,
            n_grid: args.n_grid.clone(),
            replicas,
            seed: args.seed.unwrap_or(0),
            truncation_tol,
            tolerances,
            mode: args.mode.unwrap_or(WalkMode::Direct),
            profile: args.profile,
            stop: args.stop,
            sampler: args.sampler,
            k: args.k,
            m: args.m,
            delta: args.delta,
            big_m: args.big_m,
            threads: args.threads,
            out: args.out.clone(),
            format: args.format,
        })
    }

    pub fn from_cli(cli: &Cli) -> Result<Self, UsageError> {
        Self::from_args(cli.command, &cli.args)
    }

    /// First 16 hex digits of the SHA-256 of the serialized configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).unwrap_or_default();
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

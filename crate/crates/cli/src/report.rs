//! The machine-readable run report.

use serde::Serialize;
use serde_json::Value;
use urnlab::{EstimateSummary, TheoremVerdict};

use crate::config::{Command, ExperimentConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: "urnlab",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedEstimate {
    pub name: String,
    #[serde(flatten)]
    pub summary: EstimateSummary,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RngAccounting {
    pub master_seed: u64,
    pub streams_used: u64,
    pub rubin_ties: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub command: Command,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub wall_clock_seconds: f64,
    pub pass: bool,
    pub verdicts: Vec<TheoremVerdict>,
    pub estimates: Vec<NamedEstimate>,
    /// Command-specific output.
    pub results: Value,
    pub rng: RngAccounting,
    pub errors: Vec<String>,
}

impl RunReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: ToolInfo::default(),
            command: config.command,
            config_hash: config.hash(),
            config: config.clone(),
            wall_clock_seconds: 0.0,
            pass: true,
            verdicts: Vec::new(),
            estimates: Vec::new(),
            results: Value::Null,
            rng: RngAccounting {
                master_seed: config.seed,
                ..Default::default()
            },
            errors: Vec::new(),
        }
    }

    pub fn push_verdict(&mut self, v: TheoremVerdict) {
        self.pass &= v.pass;
        self.verdicts.push(v);
    }

    pub fn push_estimate(&mut self, name: impl Into<String>, summary: EstimateSummary) {
        self.estimates.push(NamedEstimate {
            name: name.into(),
            summary,
        });
    }

    pub fn push_error(&mut self, e: impl ToString) {
        self.pass = false;
        self.errors.push(e.to_string());
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).unwrap_or_default();
        s.push('\n');
        s
    }

    /// Verdict table with a config-hash comment header.
    pub fn verdicts_csv(&self) -> String {
        let mut s = format!(
            "# config_hash={}\ntheorem_id,target_value,observed,tolerance,method,pass\n",
            self.config_hash
        );
        for v in &self.verdicts {
            let method = serde_json::to_value(v.method)
                .ok()
                .and_then(|m| m.as_str().map(str::to_owned))
                .unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                v.theorem_id, v.target_value, v.observed, v.tolerance, method, v.pass
            ));
        }
        s
    }
}

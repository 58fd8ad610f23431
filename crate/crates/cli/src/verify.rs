//! The verification battery: every theorem check and oracle identity,
//! registered in [`Check::ALL`].

use serde::Serialize;
use urnlab::checks::{self, DriftSweep, Tolerances};
use urnlab::oracle::exact_tail;
use urnlab::stats::fit_tail_decay;
use urnlab::{exact_after_n, Method, MonteCarlo, Result, Side, TheoremVerdict, UrnSpec, WeightFunction};

use crate::config::{ExperimentConfig, Profile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    TothIdentity,
    SrwDegeneration,
    VarLimit,
    VarAtTau,
    VarAtTauCrossCheck,
    MeanAtTau,
    MeanScaledAtTau,
    SeriesAsymptotics,
    WalkConstructions,
    RubinLaw,
    TailDecay,
    TailCalibration,
    VarianceBridge,
    VarIncrement,
    TauVs2n,
    SupExcursion,
    DriftBound,
    PathwiseInequality,
    DpVsMc,
}

impl Check {
    pub const ALL: [Check; 19] = [
        Check::TothIdentity,
        Check::SrwDegeneration,
        Check::VarLimit,
        Check::VarAtTau,
        Check::VarAtTauCrossCheck,
        Check::MeanAtTau,
        Check::MeanScaledAtTau,
        Check::SeriesAsymptotics,
        Check::WalkConstructions,
        Check::RubinLaw,
        Check::TailDecay,
        Check::TailCalibration,
        Check::VarianceBridge,
        Check::VarIncrement,
        Check::TauVs2n,
        Check::SupExcursion,
        Check::DriftBound,
        Check::PathwiseInequality,
        Check::DpVsMc,
    ];

    /// Position in [`Check::ALL`]. The exhaustive match makes a new variant
    /// a compile error until it is registered.
    pub fn index(self) -> usize {
        match self {
            Check::TothIdentity => 0,
            Check::SrwDegeneration => 1,
            Check::VarLimit => 2,
            Check::VarAtTau => 3,
            Check::VarAtTauCrossCheck => 4,
            Check::MeanAtTau => 5,
            Check::MeanScaledAtTau => 6,
            Check::SeriesAsymptotics => 7,
            Check::WalkConstructions => 8,
            Check::RubinLaw => 9,
            Check::TailDecay => 10,
            Check::TailCalibration => 11,
            Check::VarianceBridge => 12,
            Check::VarIncrement => 13,
            Check::TauVs2n => 14,
            Check::SupExcursion => 15,
            Check::DriftBound => 16,
            Check::PathwiseInequality => 17,
            Check::DpVsMc => 18,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Check::TothIdentity => "toth_identity",
            Check::SrwDegeneration => "srw_degeneration",
            Check::VarLimit => "var_limit",
            Check::VarAtTau => "var_at_tau",
            Check::VarAtTauCrossCheck => "var_at_tau_mc_vs_dp",
            Check::MeanAtTau => "mean_at_tau",
            Check::MeanScaledAtTau => "mean_scaled_at_tau",
            Check::SeriesAsymptotics => "series_asymptotics",
            Check::WalkConstructions => "walk_constructions",
            Check::RubinLaw => "rubin_law",
            Check::TailDecay => "tail_decay",
            Check::TailCalibration => "tail_calibration",
            Check::VarianceBridge => "variance_bridge",
            Check::VarIncrement => "var_increment",
            Check::TauVs2n => "tau_vs_2n",
            Check::SupExcursion => "sup_excursion",
            Check::DriftBound => "drift_bound",
            Check::PathwiseInequality => "pathwise_inequality",
            Check::DpVsMc => "dp_vs_mc",
        }
    }
}

/// Sizes used by each check.
#[derive(Debug, Clone, Serialize)]
pub struct Plan {
    pub toth_ns: Vec<u64>,
    pub toth_relative_bound: f64,
    pub var_grid: Vec<u64>,
    pub tau_ns: Vec<u64>,
    pub cross_n: u64,
    pub cross_replicas: u64,
    pub mean_grid: Vec<u64>,
    pub series_n: u64,
    pub series_rel: f64,
    pub walk_len: usize,
    pub rubin_samples: u64,
    pub tail_n: u64,
    pub bridge_n: u64,
    pub bridge_replicas: u64,
    pub increment_n: u64,
    pub increment_gap: u64,
    pub increment_replicas: u64,
    pub tau_gap_grid: Vec<u64>,
    pub tau_gap_replicas: u64,
    pub excursion_m: u64,
    pub excursion_n: u64,
    pub excursion_y: Vec<f64>,
    pub excursion_replicas: u64,
    pub drift: DriftSweep,
    pub pathwise_n: u64,
    pub pathwise_replicas: u64,
    pub dp_mc_n: u64,
    pub dp_mc_replicas: u64,
}

impl Plan {
    pub fn for_profile(profile: Profile) -> Self {
        let full = Plan {
            toth_ns: vec![1, 2, 3, 4, 5, 6, 7, 8, 64, 256],
            toth_relative_bound: 1e-10,
            var_grid: vec![1024, 2048, 4096],
            tau_ns: vec![1024, 4096],
            cross_n: 10_000,
            cross_replicas: 10_000,
            mean_grid: vec![256, 1024, 4096],
            series_n: 1_000_000,
            series_rel: 0.01,
            walk_len: 10,
            rubin_samples: 1_000_000,
            tail_n: 1024,
            bridge_n: 10_000,
            bridge_replicas: 100_000,
            increment_n: 10_000,
            increment_gap: 2000,
            increment_replicas: 100_000,
            tau_gap_grid: vec![1024, 4096, 16384],
            tau_gap_replicas: 10_000,
            excursion_m: 300,
            excursion_n: 1000,
            excursion_y: vec![0.5, 1.0, 1.5, 2.0],
            excursion_replicas: 10_000,
            drift: DriftSweep::default(),
            pathwise_n: 1000,
            pathwise_replicas: 10_000,
            dp_mc_n: 100,
            dp_mc_replicas: 1_000_000,
        };
        match profile {
            Profile::Full => full,
            Profile::Quick => Plan {
                toth_ns: vec![1, 2, 3, 4, 5, 6, 7, 8, 64],
                var_grid: vec![256, 512, 1024],
                tau_ns: vec![256, 1024],
                cross_n: 1024,
                cross_replicas: 4000,
                mean_grid: vec![64, 256, 1024],
                series_n: 100_000,
                walk_len: 8,
                rubin_samples: 200_000,
                tail_n: 512,
                bridge_n: 1000,
                bridge_replicas: 20_000,
                increment_n: 2000,
                increment_gap: 400,
                increment_replicas: 20_000,
                tau_gap_grid: vec![256, 1024, 4096],
                tau_gap_replicas: 2000,
                excursion_m: 30,
                excursion_n: 200,
                excursion_replicas: 2000,
                drift: DriftSweep {
                    i_max: 100_000,
                    ..DriftSweep::default()
                },
                pathwise_n: 256,
                pathwise_replicas: 2000,
                ..full
            },
        }
    }
}

/// Everything a check needs besides its own sizes.
pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub plan: Plan,
    pub mc: MonteCarlo,
    pub tol: Tolerances,
}

impl<'a> Context<'a> {
    pub fn new(config: &'a ExperimentConfig) -> Self {
        let mut plan = Plan::for_profile(config.profile);
        if let Some(grid) = &config.n_grid {
            plan.var_grid = grid.clone();
            plan.mean_grid = grid.clone();
        }
        Self {
            config,
            plan,
            mc: MonteCarlo::new(config.seed, config.threads),
            tol: config.tolerances,
        }
    }

    /// Weight functions swept by grid checks: the configured one, or
    /// alpha in {0.5, 1, 2} x B in {0, 0.3}.
    fn weight_grid(&self) -> Vec<WeightFunction> {
        if self.config.weights_explicit {
            return vec![self.config.weights.clone()];
        }
        [0.5, 1.0, 2.0]
            .iter()
            .flat_map(|&a| [0.0, 0.3].map(|b| WeightFunction::perturbed(a, b)))
            .collect::<Result<_>>()
            .unwrap_or_default()
    }

    /// Weights with the given exponent from the grid (or the configured ones).
    fn weights_with_alpha(&self, alpha: f64) -> Vec<WeightFunction> {
        if self.config.weights_explicit {
            return vec![self.config.weights.clone()];
        }
        self.weight_grid().into_iter().filter(|w| w.alpha() == alpha).collect()
    }

    /// One representative weight function per exponent (B = 0).
    fn single(&self, alpha: f64) -> WeightFunction {
        if self.config.weights_explicit {
            return self.config.weights.clone();
        }
        WeightFunction::perturbed(alpha, 0.0).unwrap_or_else(|_| WeightFunction::constant())
    }

    fn sides(&self) -> Vec<Side> {
        if self.config.weights_explicit {
            vec![self.config.side]
        } else {
            Side::ALL.to_vec()
        }
    }

    fn main_side(&self) -> Side {
        self.config.side
    }

    /// Every built-in family for the drift sweep.
    fn drift_families(&self) -> Vec<WeightFunction> {
        if self.config.weights_explicit {
            return vec![self.config.weights.clone()];
        }
        let mut v = self.weight_grid();
        v.extend([0.5, 1.0, 2.0].iter().filter_map(|&a| WeightFunction::specific(a).ok()));
        if let Ok(t) = WeightFunction::table(vec![1.0, 0.7, 0.4, 0.3], 1.0, 0.3) {
            v.push(t);
        }
        v.push(WeightFunction::constant());
        v
    }

    pub fn run(&self, check: Check) -> Result<Vec<TheoremVerdict>> {
        let p = &self.plan;
        let tol = &self.tol;
        let mut out = Vec::new();
        match check {
            Check::TothIdentity => {
                for side in self.sides() {
                    for wf in self.weight_grid() {
                        for &n in &p.toth_ns {
                            out.push(checks::check_toth(
                                &UrnSpec::new(side, wf.clone()),
                                n,
                                p.toth_relative_bound,
                            )?);
                        }
                    }
                }
            }
            Check::SrwDegeneration => out.push(srw_degeneration()?),
            Check::VarLimit => {
                for side in self.sides() {
                    for wf in self.weight_grid() {
                        out.push(checks::check_var_limit(&UrnSpec::new(side, wf), &p.var_grid, tol)?);
                    }
                }
            }
            Check::VarAtTau => {
                for side in self.sides() {
                    for wf in self.weight_grid() {
                        for &n in &p.tau_ns {
                            let spec = UrnSpec::new(side, wf.clone());
                            out.push(checks::check_var_at_tau(&spec, n, self.config.replicas, &self.mc, tol)?);
                        }
                    }
                }
            }
            Check::VarAtTauCrossCheck => {
                let spec = UrnSpec::new(self.main_side(), self.single(1.0));
                out.push(checks::cross_check_var_at_tau(
                    &spec,
                    p.cross_n,
                    p.cross_replicas,
                    &self.mc,
                    tol,
                )?);
            }
            Check::MeanAtTau => {
                for side in self.sides() {
                    for wf in self.weights_with_alpha(1.0) {
                        out.push(checks::check_mean_at_tau(side, &wf, &p.mean_grid, tol)?);
                    }
                }
                if !self.config.weights_explicit {
                    for wf in self.weights_with_alpha(2.0) {
                        out.push(checks::check_mean_at_tau(Side::Zero, &wf, &p.mean_grid, tol)?);
                    }
                }
            }
            Check::MeanScaledAtTau => {
                for side in self.sides() {
                    for wf in self.weights_with_alpha(1.0) {
                        out.push(checks::check_mean_scaled_at_tau(side, &wf, &p.mean_grid)?);
                    }
                }
            }
            Check::SeriesAsymptotics => {
                for wf in self.weight_grid() {
                    out.push(checks::check_series(&wf, p.series_n, p.series_rel));
                }
            }
            Check::WalkConstructions => {
                for wf in self.weight_grid() {
                    out.push(checks::check_walk_constructions(&wf, p.walk_len)?);
                }
            }
            Check::RubinLaw => {
                for side in self.sides() {
                    let spec = UrnSpec::new(side, self.single(1.0));
                    out.push(checks::check_rubin_law(&spec, 6, p.rubin_samples, &self.mc, tol)?.0);
                }
            }
            Check::TailDecay => {
                for wf in self.weights_with_alpha(1.0) {
                    let spec = UrnSpec::new(self.main_side(), wf);
                    out.push(checks::check_tail_decay(&exact_after_n(&spec, p.tail_n)?, p.tail_n)?);
                }
            }
            Check::TailCalibration => out.push(tail_calibration(p.tail_n)?),
            Check::VarianceBridge => {
                let n = p.bridge_n;
                let (k, m) = (self.config.k.unwrap_or(n), self.config.m.unwrap_or(2 * n));
                for alpha in [0.5, 1.0] {
                    let spec = UrnSpec::new(self.main_side(), self.single(alpha));
                    out.push(checks::check_variance_bridge(
                        &spec,
                        n,
                        k,
                        m,
                        self.config.delta,
                        p.bridge_replicas,
                        &self.mc,
                        tol,
                    )?);
                    if self.config.weights_explicit {
                        break;
                    }
                }
            }
            Check::VarIncrement => {
                let spec = UrnSpec::new(self.main_side(), self.single(1.0));
                let n = p.increment_n;
                out.push(checks::check_var_increment(
                    &spec,
                    n,
                    n + p.increment_gap,
                    p.increment_replicas,
                    &self.mc,
                    tol,
                )?);
            }
            Check::TauVs2n => {
                let spec = UrnSpec::new(self.main_side(), self.single(1.0));
                out.push(checks::check_tau_vs_2n(
                    &spec,
                    &p.tau_gap_grid,
                    p.tau_gap_replicas,
                    &self.mc,
                    tol,
                )?);
            }
            Check::SupExcursion => {
                let spec = UrnSpec::new(self.main_side(), self.single(1.0));
                let big_m = self.config.big_m.unwrap_or(p.excursion_m);
                out.push(checks::check_sup_excursion(
                    &spec,
                    big_m,
                    p.excursion_n,
                    &p.excursion_y,
                    p.excursion_replicas,
                    &self.mc,
                )?);
            }
            Check::DriftBound => {
                for side in self.sides() {
                    for wf in self.drift_families() {
                        out.push(checks::check_drift_bound(&UrnSpec::new(side, wf), &p.drift, tol)?);
                    }
                }
            }
            Check::PathwiseInequality => {
                for side in self.sides() {
                    let spec = UrnSpec::new(side, self.single(1.0));
                    out.push(checks::check_pathwise_inequality(
                        &spec,
                        p.pathwise_n,
                        p.pathwise_replicas,
                        &self.mc,
                    ));
                }
            }
            Check::DpVsMc => {
                let spec = UrnSpec::new(self.main_side(), self.single(1.0));
                out.push(checks::check_dp_vs_mc(
                    &spec,
                    p.dp_mc_n,
                    p.dp_mc_replicas,
                    &self.mc,
                    tol,
                )?);
            }
        }
        Ok(out)
    }
}

/// Constant weights: `E[D_n] = 0` and `Var(D_n) = n` for `n <= 64`, and
/// `P(|D_2| >= 2) = 1/2`.
pub fn srw_degeneration() -> Result<TheoremVerdict> {
    let spec = UrnSpec::new(Side::Zero, WeightFunction::constant());
    let mut worst: f64 = 0.0;
    for n in 1..=64 {
        let d = exact_after_n(&spec, n)?;
        worst = worst
            .max(d.mean_discrepancy().abs())
            .max((d.variance_discrepancy() - n as f64).abs());
    }
    let tail = exact_tail(&exact_after_n(&spec, 2)?, 2);
    Ok(
        TheoremVerdict::new("srw_degeneration", 0.0, worst, 1e-12, Method::ExactDp)
            .require("tail_d2_is_half", tail == 0.5)
            .detail("p_abs_d2_ge_2", tail),
    )
}

/// Tail fit on exact SRW tails recovers the Gaussian constant 1/2.
pub fn tail_calibration(n: u64) -> Result<TheoremVerdict> {
    let spec = UrnSpec::new(Side::Zero, WeightFunction::constant());
    let dist = exact_after_n(&spec, n)?;
    let fit = fit_tail_decay(&checks::exact_tails(&dist), n)?;
    Ok(
        TheoremVerdict::new("tail_calibration", 0.5, fit.c_fit, 0.1, Method::Fit)
            .require("monotone", fit.monotone)
            .detail("n", n)
            .detail("fit", fit),
    )
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn registry_is_complete() {
        for (i, c) in Check::ALL.iter().enumerate() {
            assert_eq!(c.index(), i, "{c:?} registered out of order");
        }
        let names: HashSet<_> = Check::ALL.iter().map(|c| c.name()).collect();
        assert_eq!(names.len(), Check::ALL.len());
    }

    #[test]
    fn registry_covers_every_stats_check() {
        let names: HashSet<_> = Check::ALL.iter().map(|c| c.name()).collect();
        for required in [
            "var_limit",
            "var_at_tau",
            "mean_at_tau",
            "mean_scaled_at_tau",
            "variance_bridge",
            "var_increment",
            "tail_decay",
            "sup_excursion",
            "tau_vs_2n",
            "drift_bound",
            "toth_identity",
            "series_asymptotics",
            "walk_constructions",
            "rubin_law",
        ] {
            assert!(names.contains(required), "{required} not registered");
        }
    }

    #[test]
    fn srw_self_tests() {
        assert!(srw_degeneration().unwrap().pass);
        let v = tail_calibration(1024).unwrap();
        assert!(v.pass, "{v:?}");
    }
}

//! Estimators: mergeable moment accumulators, verdict records, chi-square
//! goodness of fit and the tail-decay fit.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::numeric::linear_fit;

/// One-pass central moments up to order four (Pébay's update and merge
/// formulas), so that per-worker accumulators can be combined exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MomentAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2 - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let d = other.mean - self.mean;
        let d2 = d * d;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 =
            self.m3 + other.m3 + d2 * d * na * nb * (na - nb) / (n * n) + 3.0 * d * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * d * (na * other.m3 - nb * self.m3) / n;
        Self {
            count: self.count + other.count,
            mean: self.mean + d * nb / n,
            m2,
            m3,
            m4,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        (self.m2 / (self.count as f64 - 1.0)).max(0.0)
    }

    pub fn summary(&self) -> Result<EstimateSummary> {
        if self.count < 2 {
            return Err(Error::TooFewValues {
                needed: 2,
                got: self.count as usize,
            });
        }
        let n = self.count as f64;
        let variance = self.variance();
        let sigma2 = self.m2 / n;
        let mu4 = self.m4 / n;
        // Var(s^2) = mu4/n - sigma^4 (n-3)/(n(n-1))
        let var_of_var = (mu4 / n - sigma2 * sigma2 * (n - 3.0) / (n * (n - 1.0))).max(0.0);
        Ok(EstimateSummary {
            n_replicas: self.count,
            mean: self.mean,
            variance,
            stderr_mean: (variance / n).sqrt(),
            stderr_variance: var_of_var.sqrt(),
        })
    }
}

impl Extend<f64> for MomentAccumulator {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.push(x);
        }
    }
}

impl FromIterator<f64> for MomentAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        acc.extend(iter);
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub n_replicas: u64,
    pub mean: f64,
    pub variance: f64,
    pub stderr_mean: f64,
    pub stderr_variance: f64,
}

/// Mean and unbiased variance of a stream of values, with standard errors.
pub fn streaming_moments<I: IntoIterator<Item = f64>>(values: I) -> Result<EstimateSummary> {
    values.into_iter().collect::<MomentAccumulator>().summary()
}

/// Summary of `values` accumulated in fixed-size blocks that are merged in
/// order; the block size does not depend on the worker count.
pub fn blocked_moments(values: &[f64], block: usize) -> Result<EstimateSummary> {
    values
        .chunks(block.max(1))
        .map(|c| c.iter().copied().collect::<MomentAccumulator>())
        .fold(MomentAccumulator::new(), |acc, b| acc.merge(&b))
        .summary()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "exact-DP")]
    ExactDp,
    #[serde(rename = "monte-carlo")]
    MonteCarlo,
    #[serde(rename = "fit")]
    Fit,
}

/// Outcome of one theorem check.
///
/// `pass` is `|observed - target| <= tolerance` combined with every named
/// side condition recorded under `details.conditions` (trend and fit
/// criteria).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub theorem_id: String,
    pub target_value: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub method: Method,
    pub pass: bool,
    pub details: Map<String, Value>,
}

impl TheoremVerdict {
    pub fn new(theorem_id: impl Into<String>, target: f64, observed: f64, tolerance: f64, method: Method) -> Self {
        let pass = (observed - target).abs() <= tolerance;
        let mut details = Map::new();
        details.insert("within_tolerance".into(), Value::Bool(pass));
        Self {
            theorem_id: theorem_id.into(),
            target_value: target,
            observed,
            tolerance,
            method,
            pass,
            details,
        }
    }

    /// A fit-criterion verdict: `target` is the reference threshold and
    /// `pass` is decided by the conditions added with [`Self::require`].
    pub fn fit(theorem_id: impl Into<String>, target: f64, observed: f64) -> Self {
        let mut v = Self::new(theorem_id, target, observed, 0.0, Method::Fit);
        v.pass = true;
        v.details.remove("within_tolerance");
        v
    }

    /// Add a named side condition; the verdict passes only if all hold.
    pub fn require(mut self, name: &str, holds: bool) -> Self {
        let conditions = self
            .details
            .entry("conditions")
            .or_insert_with(|| Value::Object(Map::new()));
        if let Value::Object(m) = conditions {
            m.insert(name.into(), Value::Bool(holds));
        }
        self.pass &= holds;
        self
    }

    pub fn detail(mut self, key: &str, value: impl Serialize) -> Self {
        self.details
            .insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
}

/// Pearson chi-square goodness of fit of `counts` against `probs`.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> Result<ChiSquareResult> {
    if counts.len() != probs.len() || counts.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "chi-square needs matching category lists of length >= 2 (got {} and {})",
            counts.len(),
            probs.len()
        )));
    }
    let total: u64 = counts.iter().sum();
    let total = total as f64;
    let statistic: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = total * p;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let dof = counts.len() as u64 - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    })
}

/// Result of fitting `log P(|D| >= m) = log C - c m^2/(m v n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub c_fit: f64,
    pub log_c: f64,
    pub points_used: usize,
    pub monotone: bool,
}

impl TailFit {
    pub fn pass(&self) -> bool {
        self.c_fit > 0.0 && self.monotone
    }
}

/// Least-squares fit of the Gaussian-scale tail envelope. Points with
/// `m = 0` or `P <= 1e-12` are excluded.
pub fn fit_tail_decay(tails: &[(u64, f64)], n: u64) -> Result<TailFit> {
    let monotone = tails.windows(2).all(|w| w[1].1 <= w[0].1);
    let points: Vec<(f64, f64)> = tails
        .iter()
        .filter(|(m, p)| *m > 0 && *p > 1e-12)
        .map(|&(m, p)| {
            let m = m as f64;
            (-m * m / m.max(n as f64), p.ln())
        })
        .collect();
    let (log_c, c_fit) = linear_fit(&points).ok_or(Error::TooFewValues {
        needed: 2,
        got: points.len(),
    })?;
    Ok(TailFit {
        c_fit,
        log_c,
        points_used: points.len(),
        monotone,
    })
}

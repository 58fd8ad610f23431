//! Weight functions `w: N0 -> (0, inf)` with `1/w(n) = n^alpha (1 + 2B/n + O(n^-2))`.
//!
//! Three families are provided:
//!
//! * [`Family::Specific`]: `w(n) = (n+1)^-alpha`. Expanding `(n+1)^alpha` pins
//!   `B = alpha/2`, so the constant is derived and never configurable.
//! * [`Family::Perturbed`]: `1/w(n) = n^alpha + 2B n^(alpha-1)` for `n >= 1`,
//!   `w(0) = w0` (default 1). When `n + 2B < 1/2` the closed form may be
//!   nonpositive and is floored at `max(n^alpha / 2, 1/w0)`; the floor is never
//!   active for `n > -4B`.
//! * [`Family::Table`]: user-supplied head values, continued by the perturbed
//!   formula with the same `(alpha, B)`.
//!
//! [`Family::Constant`] (`w = 1`) sits outside the asymptotic class and exists
//! as a simple-random-walk calibration case for the test harness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Specific,
    Perturbed,
    Table,
    Constant,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Specific => "specific",
            Family::Perturbed => "perturbed",
            Family::Table => "table",
            Family::Constant => "constant",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "specific" => Ok(Family::Specific),
            "perturbed" => Ok(Family::Perturbed),
            "table" => Ok(Family::Table),
            "constant" => Ok(Family::Constant),
            other => Err(Error::InvalidWeight(format!("unknown family {other:?}"))),
        }
    }
}

/// An immutable, validated weight function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightConfig", into = "WeightConfig")]
pub struct WeightFunction {
    family: Family,
    alpha: f64,
    bee: f64,
    w0: f64,
    table: Vec<f64>,
}

/// Wire form of a [`WeightFunction`]: `family`, `alpha`, `B`, `w0`, `table`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub family: Family,
    #[serde(default)]
    pub alpha: f64,
    #[serde(rename = "B", default)]
    pub bee: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w0: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<f64>,
}

impl TryFrom<WeightConfig> for WeightFunction {
    type Error = Error;

    fn try_from(c: WeightConfig) -> Result<Self> {
        let wf = match c.family {
            Family::Specific => WeightFunction::specific(c.alpha)?,
            Family::Perturbed => WeightFunction::perturbed(c.alpha, c.bee)?,
            Family::Table => WeightFunction::table(c.table, c.alpha, c.bee)?,
            Family::Constant => WeightFunction::constant(),
        };
        match c.w0 {
            Some(w0) => wf.with_w0(w0),
            None => Ok(wf),
        }
    }
}

impl From<WeightFunction> for WeightConfig {
    fn from(wf: WeightFunction) -> Self {
        let w0 = (wf.family == Family::Perturbed && wf.w0 != 1.0).then_some(wf.w0);
        WeightConfig {
            family: wf.family,
            alpha: wf.alpha,
            bee: wf.bee,
            w0,
            table: wf.table,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidWeight(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    Ok(())
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidWeight(format!("{name} must be finite, got {v}")));
    }
    Ok(())
}

impl WeightFunction {
    /// `w(n) = (n+1)^-alpha`.
    pub fn specific(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            family: Family::Specific,
            alpha,
            bee: alpha / 2.0,
            w0: 1.0,
            table: Vec::new(),
        })
    }

    pub fn perturbed(alpha: f64, bee: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_finite("B", bee)?;
        Ok(Self {
            family: Family::Perturbed,
            alpha,
            bee,
            w0: 1.0,
            table: Vec::new(),
        })
    }

    /// Explicit values `w(0), ..., w(len-1)`, continued by the perturbed formula.
    pub fn table(values: Vec<f64>, alpha: f64, bee: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_finite("B", bee)?;
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidWeight(format!(
                "table entry {i} must be positive, got {v}"
            )));
        }
        let w0 = values.first().copied().unwrap_or(1.0);
        Ok(Self {
            family: Family::Table,
            alpha,
            bee,
            w0,
            table: values,
        })
    }

    /// `w = 1`: the simple random walk. Not part of the asymptotic class.
    pub fn constant() -> Self {
        Self {
            family: Family::Constant,
            alpha: 0.0,
            bee: 0.0,
            w0: 1.0,
            table: Vec::new(),
        }
    }

    /// Override `w(0)` for the perturbed family.
    pub fn with_w0(mut self, w0: f64) -> Result<Self> {
        if !(w0.is_finite() && w0 > 0.0) {
            return Err(Error::InvalidWeight(format!("w0 must be positive, got {w0}")));
        }
        if self.family != Family::Perturbed {
            return Err(Error::InvalidWeight(format!(
                "w0 override only applies to the perturbed family, not {}",
                self.family
            )));
        }
        self.w0 = w0;
        Ok(self)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn bee(&self) -> f64 {
        self.bee
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    /// `1/w(n) = n^alpha + 2B n^(alpha-1)` with the positivity floor.
    fn perturbed_inv(&self, n: u64) -> f64 {
        if n == 0 {
            return 1.0 / self.w0;
        }
        let x = n as f64;
        let head = x.powf(self.alpha);
        let formula = head * (1.0 + 2.0 * self.bee / x);
        if x + 2.0 * self.bee < 0.5 {
            formula.max(0.5 * head).max(1.0 / self.w0)
        } else {
            formula
        }
    }

    fn perturbed_clamped(&self, n: u64) -> bool {
        n >= 1 && (n as f64) + 2.0 * self.bee < 0.5
    }

    /// `1 / w(n)`.
    pub fn inv_weight(&self, n: u64) -> f64 {
        match self.family {
            Family::Constant => 1.0,
            Family::Specific => ((n as f64) + 1.0).powf(self.alpha),
            Family::Perturbed => self.perturbed_inv(n),
            Family::Table => match self.table.get(n as usize) {
                Some(v) => 1.0 / v,
                None => self.perturbed_inv(n),
            },
        }
    }

    /// `w(n)`.
    pub fn weight(&self, n: u64) -> f64 {
        let inv = self.inv_weight(n);
        if inv.is_finite() {
            1.0 / inv
        } else {
            self.log_weight(n).exp()
        }
    }

    /// `log w(n)`, evaluated without forming `n^alpha`.
    pub fn log_weight(&self, n: u64) -> f64 {
        match self.family {
            Family::Constant => 0.0,
            Family::Specific => -self.alpha * ((n as f64) + 1.0).ln(),
            Family::Table if (n as usize) < self.table.len() => self.table[n as usize].ln(),
            Family::Perturbed | Family::Table => {
                if n == 0 {
                    self.w0.ln()
                } else if self.perturbed_clamped(n) {
                    -self.perturbed_inv(n).ln()
                } else {
                    let x = n as f64;
                    -(self.alpha * x.ln() + (2.0 * self.bee / x).ln_1p())
                }
            }
        }
    }

    /// Smallest index from which `1/w` is nondecreasing and given by a closed
    /// form (no table entries, no floor).
    pub fn monotone_from(&self) -> u64 {
        match self.family {
            Family::Constant | Family::Specific => 0,
            Family::Perturbed | Family::Table => {
                // d/dx (x^a + 2B x^(a-1)) = x^(a-2) (a x + 2B (a-1))
                let slope_root = 2.0 * self.bee * (1.0 - self.alpha) / self.alpha;
                let floor_root = 0.5 - 2.0 * self.bee;
                let start = slope_root.max(floor_root).max(0.0).floor() as u64 + 1;
                start.max(self.table.len() as u64).max(1)
            }
        }
    }

    /// Constant `E` with `1/w(m) <= E (m+1)^alpha` for every `m >= monotone_from()`.
    pub fn growth_constant(&self) -> f64 {
        1.0 + 2.0 * self.bee.abs()
    }
}

/// `sum_{i<n} (1/w(2i+1) - 1/w(2i))`, compensated.
pub fn odd_even_series(wf: &WeightFunction, n: u64) -> f64 {
    let mut acc = CompensatedSum::new();
    for i in 0..n {
        acc.add(wf.inv_weight(2 * i + 1) - wf.inv_weight(2 * i));
    }
    acc.value()
}

/// The leading asymptote `2^(alpha-1) n^alpha` of [`odd_even_series`].
pub fn odd_even_asymptote(alpha: f64, n: u64) -> f64 {
    (alpha - 1.0).exp2() * (n as f64).powf(alpha)
}

//! Exact laws of the urn by dynamic programming.
//!
//! Two lattices are supported: the law of `(B_n, R_n)` after a fixed number
//! of draws (finite support, cost `O(n^2)`), and the law of `R` at the
//! absorption time `tau_n^B` (infinite support in `R`, truncated with a
//! certified bound).
//!
//! # Truncation certificate
//!
//! The absorption DP tracks reds in `0..=red_cap`. Mass that reaches
//! `red_cap + 1` at any level is dropped into `residual`. Past
//! `a = red_cap + 1` the red-draw probability at every level is at most
//! `q = max_i (1/b(i)) / (max_i (1/b(i)) + 1/r(a))` (requires `1/r` to be
//! nondecreasing from `a`, see [`WeightFunction::monotone_from`]), so the
//! extra reds after escaping are dominated by a sum of `n` geometric
//! variables, itself dominated by `Gamma(n, -ln q)`. With
//! `1/r(j) <= E (2j+2)^alpha` this bounds `E[g(R); escaped]` for the
//! envelope `g(R) = sum_{j<R} 1/r(j) + (R+n)^2`, which dominates every
//! functional the oracle reports (`D`, `D^2`, the partial sums of `1/r`).
//!
//! [`WeightFunction::monotone_from`]: crate::weights::WeightFunction::monotone_from

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::urn::{UrnSpec, UrnState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    /// Largest `n` accepted by either DP.
    pub max_n: u64,
    /// Largest red index the absorption DP may track.
    pub max_red_cap: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_n: 10_000,
            max_red_cap: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "n")]
pub enum Lattice {
    /// Law of the state after `n` draws; cells indexed by blues.
    AfterDraws(u64),
    /// Law of the state at `tau_n^B`; cells indexed by reds.
    AtBlueAbsorption(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDistribution {
    lattice: Lattice,
    probs: Vec<f64>,
    residual: f64,
    truncation_bound: f64,
}

impl LatticeDistribution {
    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    /// Mass dropped by truncation (zero for finite lattices).
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Certified bound on `E[g; truncated]` for the envelope described in the
    /// module docs.
    pub fn truncation_bound(&self) -> f64 {
        self.truncation_bound
    }

    /// Raw cell masses, in lattice index order.
    pub fn masses(&self) -> &[f64] {
        &self.probs
    }

    fn state_of(&self, idx: usize) -> UrnState {
        let k = idx as u64;
        match self.lattice {
            Lattice::AfterDraws(n) => UrnState::new(k, n - k),
            Lattice::AtBlueAbsorption(n) => UrnState::new(n, k),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (UrnState, f64)> + '_ {
        self.probs.iter().enumerate().map(|(i, p)| (self.state_of(i), *p))
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().copied().collect::<CompensatedSum>().value()
    }

    /// `E[f(state)]` over the retained mass.
    pub fn expect<F: Fn(UrnState) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(s, p)| p * f(s)).collect::<CompensatedSum>().value()
    }

    pub fn mean_discrepancy(&self) -> f64 {
        self.expect(|s| s.discrepancy() as f64)
    }

    pub fn variance_discrepancy(&self) -> f64 {
        let m = self.mean_discrepancy();
        self.expect(|s| {
            let d = s.discrepancy() as f64 - m;
            d * d
        })
    }

    /// `(D, P(D))` in increasing order of `D`, zero cells skipped.
    pub fn discrepancy_pmf(&self) -> Vec<(i64, f64)> {
        let mut v: Vec<(i64, f64)> = self
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(s, p)| (s.discrepancy(), p))
            .collect();
        v.sort_by_key(|(d, _)| *d);
        v
    }

    /// CSV dump: `#` header lines, then `state_blues,state_reds,probability`.
    pub fn write_csv<W: Write>(&self, mut out: W, header: &[(&str, String)]) -> std::io::Result<()> {
        writeln!(out, "# residual={:e}", self.residual)?;
        writeln!(out, "# truncation_bound={:e}", self.truncation_bound)?;
        for (k, v) in header {
            writeln!(out, "# {k}={v}")?;
        }
        writeln!(out, "state_blues,state_reds,probability")?;
        for (s, p) in self.iter() {
            writeln!(out, "{},{},{:e}", s.blues, s.reds, p)?;
        }
        Ok(())
    }
}

/// `P(|D| >= m)` over the retained mass. `m = 0` is trivially 1.
pub fn exact_tail(dist: &LatticeDistribution, m: u64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    dist.iter()
        .filter(|(s, _)| s.discrepancy().unsigned_abs() >= m)
        .map(|(_, p)| p)
        .collect::<CompensatedSum>()
        .value()
}

/// Exact law of `(B_n, R_n)`.
pub fn exact_after_n(spec: &UrnSpec, n: u64) -> Result<LatticeDistribution> {
    exact_after_n_with(spec, n, &OracleLimits::default())
}

pub fn exact_after_n_with(spec: &UrnSpec, n: u64, limits: &OracleLimits) -> Result<LatticeDistribution> {
    if n > limits.max_n {
        return Err(Error::OracleCap {
            requested: n,
            cap: limits.max_n,
        });
    }
    let inv_b: Vec<f64> = (0..=n).map(|i| spec.inv_blue(i)).collect();
    let inv_r: Vec<f64> = (0..=n).map(|j| spec.inv_red(j)).collect();
    let mut p = Vec::with_capacity(n as usize + 1);
    p.push(1.0);
    for k in 0..n as usize {
        p.push(0.0);
        // Downward sweep so p[b + 1] already holds its own red update.
        for b in (0..=k).rev() {
            let (ib, ir) = (inv_b[b], inv_r[k - b]);
            let total = ib + ir;
            let mass = p[b];
            p[b + 1] += mass * (ir / total);
            p[b] = mass * (ib / total);
        }
    }
    Ok(LatticeDistribution {
        lattice: Lattice::AfterDraws(n),
        probs: p,
        residual: 0.0,
        truncation_bound: 0.0,
    })
}

/// Law of the state at `tau_n^B`, truncated so that the certified bound is
/// below `tol`.
pub fn exact_at_tau_blue(spec: &UrnSpec, n: u64, tol: f64) -> Result<LatticeDistribution> {
    exact_at_tau_blue_with(spec, n, tol, &OracleLimits::default())
}

pub fn exact_at_tau_blue_with(spec: &UrnSpec, n: u64, tol: f64, limits: &OracleLimits) -> Result<LatticeDistribution> {
    if n > limits.max_n {
        return Err(Error::OracleCap {
            requested: n,
            cap: limits.max_n,
        });
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let min_cap = spec.wf.monotone_from().div_ceil(2);
    let mut extra = 16 * ((n as f64).sqrt().ceil() as u64) + 64;
    let mut best = f64::INFINITY;
    let mut last_cap = 0;
    loop {
        let red_cap = (n + extra).max(min_cap);
        if red_cap > limits.max_red_cap {
            return Err(Error::ToleranceUnreachable {
                tol,
                achieved: best,
                red_cap: last_cap,
            });
        }
        let (probs, residual) = absorption_sweep(spec, n, red_cap);
        let bound = truncation_certificate(spec, n, red_cap, residual);
        if bound <= tol {
            return Ok(LatticeDistribution {
                lattice: Lattice::AtBlueAbsorption(n),
                probs,
                residual,
                truncation_bound: bound,
            });
        }
        best = best.min(bound);
        last_cap = red_cap;
        extra *= 2;
    }
}

/// Level-by-level absorption DP over reds `0..=red_cap`.
fn absorption_sweep(spec: &UrnSpec, n: u64, red_cap: u64) -> (Vec<f64>, f64) {
    let len = red_cap as usize + 1;
    let inv_r: Vec<f64> = (0..=red_cap).map(|j| spec.inv_red(j)).collect();
    let mut p = vec![0.0; len];
    p[0] = 1.0;
    let mut escaped = CompensatedSum::new();
    for i in 0..n {
        let ib = spec.inv_blue(i);
        // carry: mass currently on a red run that has reached reds = j
        let mut carry = 0.0;
        for (cell, &ir) in p.iter_mut().zip(&inv_r) {
            carry += *cell;
            let total = ib + ir;
            *cell = carry * (ir / total);
            carry *= ib / total;
        }
        escaped.add(carry);
    }
    (p, escaped.value())
}

/// Upper bound on `E[sum_{j<R} 1/r(j) + (R+n)^2 ; escaped]`.
fn truncation_certificate(spec: &UrnSpec, n: u64, red_cap: u64, residual: f64) -> f64 {
    if residual == 0.0 {
        return 0.0;
    }
    let a = red_cap + 1;
    if 2 * a < spec.wf.monotone_from() {
        return f64::INFINITY;
    }
    let max_inv_b = (0..n).map(|i| spec.inv_blue(i)).fold(0.0, f64::max);
    let q = max_inv_b / (max_inv_b + spec.inv_red(a));
    let rate = -q.ln();
    if !(rate > 0.0 && rate.is_finite()) {
        return f64::INFINITY;
    }
    let alpha = spec.wf.alpha();
    let k = (alpha + 1.0).ceil() as u32;
    let head: f64 = (0..a).map(|j| spec.inv_red(j)).collect::<CompensatedSum>().value();
    let t0 = (a + 1) as f64;
    let envelope = head
        + spec.wf.growth_constant() * alpha.exp2() * shifted_gamma_moment(t0, n, rate, k)
        + shifted_gamma_moment(t0 + n as f64, n, rate, 2);
    residual * envelope
}

/// Upper bound on `E[(base + S)^p]` for `S ~ Gamma(shape, rate)`.
fn shifted_gamma_moment(base: f64, shape: u64, rate: f64, p: u32) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0;
    let mut raw = 1.0; // E[S^l] = shape (shape+1) ... (shape+l-1) / rate^l
    for l in 0..=p {
        total += binom * base.powi((p - l) as i32) * raw;
        raw *= (shape as f64 + l as f64) / rate;
        binom *= (p - l) as f64 / (l + 1) as f64;
    }
    total
}

/// Both sides of `E[sum_{j < R_tau} 1/r(j)] = sum_{j<n} 1/b(j)` at `tau_n^B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TothCheck {
    pub n: u64,
    pub lhs: f64,
    pub rhs: f64,
    /// Certified truncation error of `lhs`.
    pub truncation_bound: f64,
    /// Floating-point allowance for the DP and the sums.
    pub rounding_bound: f64,
}

impl TothCheck {
    pub fn bound(&self) -> f64 {
        self.truncation_bound + self.rounding_bound
    }

    pub fn relative_gap(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.rhs.abs().max(1.0)
    }

    pub fn relative_bound(&self) -> f64 {
        self.bound() / self.rhs.abs().max(1.0)
    }

    pub fn passes(&self) -> bool {
        (self.lhs - self.rhs).abs() <= self.bound()
    }
}

/// Evaluate both sides of the identity with the absorption oracle. `tol` is
/// the target truncation error relative to the right-hand side.
pub fn toth_identity_check(spec: &UrnSpec, n: u64, tol: f64) -> Result<TothCheck> {
    let rhs = (0..n).map(|j| spec.inv_blue(j)).collect::<CompensatedSum>().value();
    let scale = rhs.abs().max(1.0);
    let dist = exact_at_tau_blue(spec, n, tol * scale)?;
    let mut prefix = CompensatedSum::new();
    let mut lhs = CompensatedSum::new();
    for (j, &p) in dist.masses().iter().enumerate() {
        // f(R) = sum_{j' < R} 1/r(j')
        lhs.add(p * prefix.value());
        prefix.add(spec.inv_red(j as u64));
    }
    let cells = dist.masses().len() as f64;
    let rounding_bound = 4.0 * (n as f64 + cells + 16.0) * f64::EPSILON * scale;
    Ok(TothCheck {
        n,
        lhs: lhs.value(),
        rhs,
        truncation_bound: dist.truncation_bound(),
        rounding_bound,
    })
}

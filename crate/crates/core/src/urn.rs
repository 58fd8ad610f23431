//! The generalized Pólya urn `(B_n, R_n)` on `N0^2`.
//!
//! From state `(i, j)` a blue ball is drawn with probability `b(i)/(b(i)+r(j))`
//! and a red ball otherwise. The three parameterizations used by the walk are
//!
//! | side  | `b(i)`     | `r(i)`     |
//! |-------|------------|------------|
//! | minus | `w(2i)`    | `w(2i+1)`  |
//! | plus  | `w(2i+1)`  | `w(2i)`    |
//! | zero  | `w(2i)`    | `w(2i)`    |
//!
//! Two samplers are provided: [`SequentialUrn`] iterates the transition law
//! directly, [`RubinUrn`] reads the draw sequence off two independent
//! superpositions of exponential marks. They are equal in law.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{RngStream, UniformSource};
use crate::weights::WeightFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
    Zero,
}

impl Side {
    pub const ALL: [Side; 3] = [Side::Plus, Side::Minus, Side::Zero];

    /// Urn side for a walk site.
    pub fn for_site(x: i64) -> Side {
        match x.signum() {
            1 => Side::Plus,
            -1 => Side::Minus,
            _ => Side::Zero,
        }
    }

    /// `lim E[D_{tau_n}]` for this side: `-alpha/(2 alpha+1) + {1/2, -1/2, 0}`.
    pub fn mean_at_tau_limit(self, alpha: f64) -> f64 {
        let base = -alpha / (2.0 * alpha + 1.0);
        match self {
            Side::Plus => base + 0.5,
            Side::Minus => base - 0.5,
            Side::Zero => base,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
            Side::Zero => "zero",
        })
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Side::Plus),
            "minus" | "-" => Ok(Side::Minus),
            "zero" | "0" => Ok(Side::Zero),
            other => Err(Error::InvalidArgument(format!("unknown urn side {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrnSpec {
    pub side: Side,
    pub wf: WeightFunction,
}

impl UrnSpec {
    pub fn new(side: Side, wf: WeightFunction) -> Self {
        Self { side, wf }
    }

    #[inline]
    fn blue_arg(&self, i: u64) -> u64 {
        match self.side {
            Side::Plus => 2 * i + 1,
            Side::Minus | Side::Zero => 2 * i,
        }
    }

    #[inline]
    fn red_arg(&self, j: u64) -> u64 {
        match self.side {
            Side::Minus => 2 * j + 1,
            Side::Plus | Side::Zero => 2 * j,
        }
    }

    pub fn blue_weight(&self, i: u64) -> f64 {
        self.wf.weight(self.blue_arg(i))
    }

    pub fn red_weight(&self, j: u64) -> f64 {
        self.wf.weight(self.red_arg(j))
    }

    pub fn log_blue(&self, i: u64) -> f64 {
        self.wf.log_weight(self.blue_arg(i))
    }

    pub fn log_red(&self, j: u64) -> f64 {
        self.wf.log_weight(self.red_arg(j))
    }

    /// `1 / b(i)`, the mean of the `(i+1)`-th blue inter-mark time.
    pub fn inv_blue(&self, i: u64) -> f64 {
        self.wf.inv_weight(self.blue_arg(i))
    }

    /// `1 / r(j)`.
    pub fn inv_red(&self, j: u64) -> f64 {
        self.wf.inv_weight(self.red_arg(j))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UrnState {
    pub blues: u64,
    pub reds: u64,
}

impl UrnState {
    pub fn new(blues: u64, reds: u64) -> Self {
        Self { blues, reds }
    }

    pub fn draws(&self) -> u64 {
        self.blues + self.reds
    }

    /// `D = R - B`.
    pub fn discrepancy(&self) -> i64 {
        self.reds as i64 - self.blues as i64
    }

    #[inline]
    pub fn apply(&mut self, color: Color) {
        match color {
            Color::Blue => self.blues += 1,
            Color::Red => self.reds += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Blue,
    Red,
}

/// `r(R)/(b(B)+r(R))`, evaluated as `1/(1+exp(log b - log r))`.
pub fn step_prob_red(spec: &UrnSpec, state: UrnState) -> f64 {
    let s = spec.log_blue(state.blues) - spec.log_red(state.reds);
    1.0 / (1.0 + s.exp())
}

/// `E[D_{i+1} - D_i | state] = (r - b)/(r + b) = tanh((log r - log b)/2)`.
pub fn conditional_drift(spec: &UrnSpec, state: UrnState) -> f64 {
    (0.5 * (spec.log_red(state.reds) - spec.log_blue(state.blues))).tanh()
}

/// `eps_i = E[D_{i+1} - D_i | state] + alpha D_i / i` for `i = B + R >= 1`.
pub fn drift_residual(spec: &UrnSpec, state: UrnState) -> Result<f64> {
    let i = state.draws();
    if i == 0 {
        return Err(Error::InvalidArgument("drift residual needs at least one draw".into()));
    }
    Ok(conditional_drift(spec, state) + spec.wf.alpha() * state.discrepancy() as f64 / i as f64)
}

/// Cached `1/b(i)`, `1/r(j)` for the sampling hot loop. Indices past the
/// cache fall back to direct evaluation.
#[derive(Debug, Clone)]
pub struct UrnRates {
    spec: UrnSpec,
    inv_blue: Vec<f64>,
    inv_red: Vec<f64>,
}

impl UrnRates {
    pub fn new(spec: &UrnSpec, capacity: usize) -> Self {
        let inv_blue = (0..capacity as u64).map(|i| spec.inv_blue(i)).collect();
        let inv_red = (0..capacity as u64).map(|j| spec.inv_red(j)).collect();
        Self {
            spec: spec.clone(),
            inv_blue,
            inv_red,
        }
    }

    pub fn spec(&self) -> &UrnSpec {
        &self.spec
    }

    #[inline]
    pub fn inv_blue(&self, i: u64) -> f64 {
        match self.inv_blue.get(i as usize) {
            Some(v) => *v,
            None => self.spec.inv_blue(i),
        }
    }

    #[inline]
    pub fn inv_red(&self, j: u64) -> f64 {
        match self.inv_red.get(j as usize) {
            Some(v) => *v,
            None => self.spec.inv_red(j),
        }
    }
}

/// A single urn that can be drawn from one ball at a time.
pub trait UrnSampler {
    fn draw(&mut self) -> Color;
    fn state(&self) -> UrnState;
}

/// Iterates the transition law with one uniform per draw.
#[derive(Debug, Clone)]
pub struct SequentialUrn<'a> {
    rates: &'a UrnRates,
    state: UrnState,
    rng: UniformSource,
}

impl<'a> SequentialUrn<'a> {
    pub fn new(rates: &'a UrnRates, rng: UniformSource) -> Self {
        Self {
            rates,
            state: UrnState::default(),
            rng,
        }
    }
}

impl UrnSampler for SequentialUrn<'_> {
    #[inline]
    fn draw(&mut self) -> Color {
        let ib = self.rates.inv_blue(self.state.blues);
        let ir = self.rates.inv_red(self.state.reds);
        // P(red) = r/(b+r) = (1/b)/(1/b + 1/r)
        let color = if self.rng.uniform() * (ib + ir) < ib {
            Color::Red
        } else {
            Color::Blue
        };
        self.state.apply(color);
        color
    }

    #[inline]
    fn state(&self) -> UrnState {
        self.state
    }
}

/// Rubin's exponential embedding: blue marks at partial sums of
/// `Exp(b(i-1))`, red marks at partial sums of `Exp(r(i-1))`; draws are read
/// off in time order. Exact ties go to blue and are counted.
#[derive(Debug, Clone)]
pub struct RubinUrn<'a> {
    rates: &'a UrnRates,
    state: UrnState,
    rng: UniformSource,
    next_blue: f64,
    next_red: f64,
    ties: u64,
}

impl<'a> RubinUrn<'a> {
    pub fn new(rates: &'a UrnRates, mut rng: UniformSource) -> Self {
        let next_blue = rng.exponential_with_mean(rates.inv_blue(0));
        let next_red = rng.exponential_with_mean(rates.inv_red(0));
        Self {
            rates,
            state: UrnState::default(),
            rng,
            next_blue,
            next_red,
            ties: 0,
        }
    }

    pub fn ties(&self) -> u64 {
        self.ties
    }
}

impl UrnSampler for RubinUrn<'_> {
    #[inline]
    fn draw(&mut self) -> Color {
        if self.next_red < self.next_blue {
            self.state.reds += 1;
            self.next_red += self.rng.exponential_with_mean(self.rates.inv_red(self.state.reds));
            Color::Red
        } else {
            if self.next_red == self.next_blue {
                self.ties += 1;
            }
            self.state.blues += 1;
            self.next_blue += self.rng.exponential_with_mean(self.rates.inv_blue(self.state.blues));
            Color::Blue
        }
    }

    #[inline]
    fn state(&self) -> UrnState {
        self.state
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "n")]
pub enum StopRule {
    /// Stop after a fixed number of draws.
    Draws(u64),
    /// Stop at `tau_n^B`, the draw of the `n`-th blue ball.
    Blues(u64),
    /// Stop at `tau_n^R`.
    Reds(u64),
}

impl StopRule {
    #[inline]
    pub fn reached(&self, state: UrnState) -> bool {
        match *self {
            StopRule::Draws(n) => state.draws() >= n,
            StopRule::Blues(n) => state.blues >= n,
            StopRule::Reds(n) => state.reds >= n,
        }
    }

    /// Rough draw count, used to size caches and pick a recording mode.
    pub fn expected_draws(&self) -> u64 {
        match *self {
            StopRule::Draws(n) => n,
            StopRule::Blues(n) | StopRule::Reds(n) => n.saturating_mul(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerOptions {
    /// Hard cap on total draws; exceeding it is a configuration error.
    pub draw_cap: u64,
    /// Record every state when the run is expected to be at most this long.
    pub full_record_threshold: u64,
    /// Checkpoint spacing for sparse recordings.
    pub checkpoint_stride: u64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            draw_cap: 1_000_000_000,
            full_record_threshold: 100_000,
            checkpoint_stride: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Recording {
    Full(Vec<UrnState>),
    Sparse { stride: u64, checkpoints: Vec<UrnState> },
}

/// A sampled urn path with its stopping times.
///
/// `tau_blue[k]` is `tau_k^B` (with `tau_0^B = 0`), likewise `tau_red`.
#[derive(Debug, Clone, PartialEq)]
pub struct UrnTrajectory {
    recording: Recording,
    final_state: UrnState,
    tau_blue: Vec<u64>,
    tau_red: Vec<u64>,
    ties: u64,
}

impl UrnTrajectory {
    /// Number of draws in the trajectory.
    pub fn len(&self) -> u64 {
        self.final_state.draws()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn final_state(&self) -> UrnState {
        self.final_state
    }

    pub fn tau_blue(&self) -> &[u64] {
        &self.tau_blue
    }

    pub fn tau_red(&self) -> &[u64] {
        &self.tau_red
    }

    pub fn is_fully_recorded(&self) -> bool {
        matches!(self.recording, Recording::Full(_))
    }

    /// Floating-point mark collisions seen by the Rubin sampler (always 0
    /// for the sequential sampler).
    pub fn ties(&self) -> u64 {
        self.ties
    }

    /// Full state sequence, if recorded.
    pub fn states(&self) -> Option<&[UrnState]> {
        match &self.recording {
            Recording::Full(s) => Some(s),
            Recording::Sparse { .. } => None,
        }
    }

    /// State after `n` draws. Sparse recordings answer at checkpoints,
    /// stopping times and the final draw.
    pub fn state_at(&self, n: u64) -> Result<UrnState> {
        if n > self.len() {
            return Err(Error::IndexOutOfRange {
                index: n,
                reason: "past the end of the trajectory",
            });
        }
        if n == self.len() {
            return Ok(self.final_state);
        }
        match &self.recording {
            Recording::Full(states) => Ok(states[n as usize]),
            Recording::Sparse { stride, checkpoints } => {
                if n.is_multiple_of(*stride) {
                    return Ok(checkpoints[(n / stride) as usize]);
                }
                if let Ok(k) = self.tau_blue.binary_search(&n) {
                    return Ok(UrnState::new(k as u64, n - k as u64));
                }
                if let Ok(k) = self.tau_red.binary_search(&n) {
                    return Ok(UrnState::new(n - k as u64, k as u64));
                }
                Err(Error::IndexOutOfRange {
                    index: n,
                    reason: "not a checkpoint or stopping time of a sparse recording",
                })
            }
        }
    }

    /// `D_n = R_n - B_n`.
    pub fn discrepancy_at(&self, n: u64) -> Result<i64> {
        self.state_at(n).map(|s| s.discrepancy())
    }

    /// CSV dump with columns `draw_index,blues,reds,discrepancy`. Sparse
    /// recordings emit their checkpoints.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "draw_index,blues,reds,discrepancy")?;
        let rows: Box<dyn Iterator<Item = UrnState> + '_> = match &self.recording {
            Recording::Full(states) => Box::new(states.iter().copied()),
            Recording::Sparse { checkpoints, .. } => Box::new(
                checkpoints
                    .iter()
                    .copied()
                    .chain((!self.len().is_multiple_of(self.stride())).then_some(self.final_state)),
            ),
        };
        for s in rows {
            writeln!(out, "{},{},{},{}", s.draws(), s.blues, s.reds, s.discrepancy())?;
        }
        Ok(())
    }

    fn stride(&self) -> u64 {
        match &self.recording {
            Recording::Full(_) => 1,
            Recording::Sparse { stride, .. } => *stride,
        }
    }
}

/// Drive `sampler` until `stop` is met, recording per `opts`.
pub fn record<S: UrnSampler>(sampler: &mut S, stop: StopRule, opts: &SamplerOptions) -> Result<UrnTrajectory> {
    let full = stop.expected_draws() <= opts.full_record_threshold;
    let stride = opts.checkpoint_stride.max(1);
    let mut recording = if full {
        Recording::Full(vec![sampler.state()])
    } else {
        Recording::Sparse {
            stride,
            checkpoints: vec![sampler.state()],
        }
    };
    let mut tau_blue = vec![0];
    let mut tau_red = vec![0];
    loop {
        let state = sampler.state();
        if stop.reached(state) {
            return Ok(UrnTrajectory {
                recording,
                final_state: state,
                tau_blue,
                tau_red,
                ties: 0,
            });
        }
        if state.draws() >= opts.draw_cap {
            return Err(Error::CapExceeded {
                cap: opts.draw_cap,
                state,
            });
        }
        let color = sampler.draw();
        let state = sampler.state();
        match color {
            Color::Blue => tau_blue.push(state.draws()),
            Color::Red => tau_red.push(state.draws()),
        }
        match &mut recording {
            Recording::Full(states) => states.push(state),
            Recording::Sparse { stride, checkpoints } => {
                if state.draws().is_multiple_of(*stride) {
                    checkpoints.push(state);
                }
            }
        }
    }
}

fn rates_for(spec: &UrnSpec, stop: StopRule, opts: &SamplerOptions) -> UrnRates {
    let cap = stop.expected_draws().min(opts.draw_cap).saturating_add(64);
    UrnRates::new(spec, cap.min(1 << 24) as usize)
}

/// Sample a trajectory by iterating the transition law.
pub fn draw_sequential(spec: &UrnSpec, stream: RngStream, stop: StopRule) -> Result<UrnTrajectory> {
    draw_sequential_with(spec, stream, stop, &SamplerOptions::default())
}

pub fn draw_sequential_with(
    spec: &UrnSpec,
    stream: RngStream,
    stop: StopRule,
    opts: &SamplerOptions,
) -> Result<UrnTrajectory> {
    let rates = rates_for(spec, stop, opts);
    let mut urn = SequentialUrn::new(&rates, stream.generator());
    record(&mut urn, stop, opts)
}

/// Sample a trajectory through Rubin's exponential construction.
pub fn draw_rubin(spec: &UrnSpec, stream: RngStream, stop: StopRule) -> Result<UrnTrajectory> {
    draw_rubin_with(spec, stream, stop, &SamplerOptions::default())
}

pub fn draw_rubin_with(
    spec: &UrnSpec,
    stream: RngStream,
    stop: StopRule,
    opts: &SamplerOptions,
) -> Result<UrnTrajectory> {
    let rates = rates_for(spec, stop, opts);
    let mut urn = RubinUrn::new(&rates, stream.generator());
    let mut traj = record(&mut urn, stop, opts)?;
    traj.ties = urn.ties();
    Ok(traj)
}

/// Exact probability of a color sequence, as a product of transition
/// probabilities.
pub fn sequence_probability(spec: &UrnSpec, colors: &[Color]) -> f64 {
    let mut state = UrnState::default();
    let mut p = 1.0;
    for &c in colors {
        let red = step_prob_red(spec, state);
        p *= match c {
            Color::Red => red,
            Color::Blue => 1.0 - red,
        };
        state.apply(c);
    }
    p
}

/// Decode the low `len` bits of `code` as a color sequence (bit set = red,
/// least significant bit first).
pub fn colors_from_code(code: u32, len: usize) -> Vec<Color> {
    (0..len)
        .map(|k| if code >> k & 1 == 1 { Color::Red } else { Color::Blue })
        .collect()
}

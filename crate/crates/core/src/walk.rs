//! Nearest-neighbour self-interacting walk on Z.
//!
//! From `X_n` the walk steps right with probability
//! `w(l(X_n)) / (w(l(X_n)) + w(l(X_n - 1)))`, where `l(x)` counts crossings
//! of the undirected edge `{x, x+1}`. Equivalently, every site runs its own
//! urn (minus side left of the origin, plus side right of it, zero side at
//! the origin) and the walk goes right on a red draw, left on a blue one.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{RngStream, UniformSource};
use crate::urn::{step_prob_red, Color, Side, UrnSpec, UrnState};
use crate::weights::WeightFunction;

/// Exact path probabilities are enumerated only up to this length.
pub const MAX_EXACT_PATH_LEN: usize = 24;

/// Dense storage over a contiguous integer range that grows on either side.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CenteredVec<T> {
    offset: i64,
    data: Vec<T>,
}

impl<T: Clone + Default> CenteredVec<T> {
    pub fn new() -> Self {
        Self {
            offset: 0,
            data: Vec::new(),
        }
    }

    fn slot(&self, x: i64) -> Option<usize> {
        let i = x.checked_add(self.offset)?;
        (i >= 0 && (i as usize) < self.data.len()).then_some(i as usize)
    }

    pub fn get(&self, x: i64) -> Option<&T> {
        self.slot(x).map(|i| &self.data[i])
    }

    pub fn get_mut(&mut self, x: i64) -> &mut T {
        if self.data.is_empty() {
            self.offset = -x;
            self.data.push(T::default());
        }
        let lo = -self.offset;
        let hi = lo + self.data.len() as i64;
        if x < lo {
            // grow geometrically to the left
            let grow = (lo - x).max(self.data.len() as i64) as usize;
            let mut fresh = vec![T::default(); grow];
            fresh.append(&mut self.data);
            self.data = fresh;
            self.offset += grow as i64;
        } else if x >= hi {
            let grow = (x - hi + 1).max(self.data.len() as i64) as usize;
            self.data.resize(self.data.len() + grow, T::default());
        }
        let i = (x + self.offset) as usize;
        &mut self.data[i]
    }

    /// Populated range `(lowest index, values)`.
    pub fn span(&self) -> (i64, &[T]) {
        (-self.offset, &self.data)
    }
}

impl CenteredVec<u64> {
    pub fn value(&self, x: i64) -> u64 {
        self.get(x).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WalkState {
    pub position: i64,
    pub time: u64,
    /// `l(x)`: crossings of edge `{x, x+1}`.
    pub edge_local_times: CenteredVec<u64>,
}

impl WalkState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn local_time(&self, x: i64) -> u64 {
        self.edge_local_times.value(x)
    }

    /// Probability of a right step under the direct transition law.
    pub fn prob_right(&self, wf: &WeightFunction) -> f64 {
        let here = wf.log_weight(self.local_time(self.position));
        let left = wf.log_weight(self.local_time(self.position - 1));
        1.0 / (1.0 + (left - here).exp())
    }

    /// Move by `step` (+1 or -1) and bump the crossed edge.
    pub fn apply(&mut self, step: i8) {
        debug_assert!(step == 1 || step == -1);
        let edge = if step > 0 { self.position } else { self.position - 1 };
        *self.edge_local_times.get_mut(edge) += 1;
        self.position += step as i64;
        self.time += 1;
    }

    /// One step of the direct transition law. Returns the step taken.
    pub fn step_direct(&mut self, wf: &WeightFunction, rng: &mut UniformSource) -> i8 {
        let step = if rng.uniform() < self.prob_right(wf) { 1 } else { -1 };
        self.apply(step);
        step
    }

    /// One step driven by the urn at the current site.
    pub fn step_urn(&mut self, bank: &mut SiteUrnBank) -> i8 {
        let step = match bank.draw(self.position) {
            Color::Red => 1,
            Color::Blue => -1,
        };
        self.apply(step);
        step
    }

    pub fn total_local_time(&self) -> u64 {
        self.edge_local_times.span().1.iter().sum()
    }

    /// CSV dump with columns `site,local_time`.
    pub fn write_local_times_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "site,local_time")?;
        let (lo, values) = self.edge_local_times.span();
        for (k, v) in values.iter().enumerate() {
            writeln!(out, "{},{}", lo + k as i64, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct SiteUrn {
    state: UrnState,
    rng: UniformSource,
}

/// Independent urns per site, created lazily on first visit. Site `x` draws
/// from its own stream `RngStream::for_site(master_seed, x)`, so the path law
/// is independent of visit order.
#[derive(Debug, Clone)]
pub struct SiteUrnBank {
    master_seed: u64,
    specs: [UrnSpec; 3],
    sites: CenteredVec<Option<SiteUrn>>,
    created: u64,
}

impl SiteUrnBank {
    pub fn new(wf: &WeightFunction, master_seed: u64) -> Self {
        Self {
            master_seed,
            specs: Side::ALL.map(|side| UrnSpec::new(side, wf.clone())),
            sites: CenteredVec::new(),
            created: 0,
        }
    }

    fn spec_for(&self, x: i64) -> &UrnSpec {
        let idx = Side::ALL.iter().position(|s| *s == Side::for_site(x)).unwrap_or(2);
        &self.specs[idx]
    }

    /// Urns created so far (one RNG stream each).
    pub fn sites_created(&self) -> u64 {
        self.created
    }

    pub fn urn_state(&self, x: i64) -> Option<UrnState> {
        self.sites.get(x).and_then(|s| s.as_ref()).map(|s| s.state)
    }

    /// Draw the next ball from the urn at site `x`.
    pub fn draw(&mut self, x: i64) -> Color {
        let spec = self.spec_for(x).clone();
        let seed = self.master_seed;
        let slot = self.sites.get_mut(x);
        if slot.is_none() {
            *slot = Some(SiteUrn {
                state: UrnState::default(),
                rng: RngStream::for_site(seed, x).generator(),
            });
            self.created += 1;
        }
        let urn = slot.as_mut().expect("site urn just created");
        let color = if urn.rng.uniform() < step_prob_red(&spec, urn.state) {
            Color::Red
        } else {
            Color::Blue
        };
        urn.state.apply(color);
        color
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkMode {
    Direct,
    Urn,
}

impl std::str::FromStr for WalkMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(WalkMode::Direct),
            "urn" => Ok(WalkMode::Urn),
            other => Err(Error::InvalidArgument(format!("unknown walk mode {other:?}"))),
        }
    }
}

/// Exact probability of a sequence of `+1/-1` steps under either
/// construction.
pub fn walk_path_prob(path: &[i8], wf: &WeightFunction, mode: WalkMode) -> Result<f64> {
    if path.len() > MAX_EXACT_PATH_LEN {
        return Err(Error::PathTooLong {
            len: path.len(),
            cap: MAX_EXACT_PATH_LEN,
        });
    }
    if let Some(bad) = path.iter().find(|s| **s != 1 && **s != -1) {
        return Err(Error::InvalidArgument(format!("step {bad} is not +1 or -1")));
    }
    let mut walk = WalkState::new();
    let mut urns: CenteredVec<UrnState> = CenteredVec::new();
    let specs = Side::ALL.map(|side| UrnSpec::new(side, wf.clone()));
    let mut p = 1.0;
    for &step in path {
        let right = match mode {
            WalkMode::Direct => walk.prob_right(wf),
            WalkMode::Urn => {
                let x = walk.position;
                let spec = &specs[Side::ALL.iter().position(|s| *s == Side::for_site(x)).unwrap_or(2)];
                let state = urns.get_mut(x);
                let red = step_prob_red(spec, *state);
                state.apply(if step > 0 { Color::Red } else { Color::Blue });
                red
            }
        };
        p *= if step > 0 { right } else { 1.0 - right };
        walk.apply(step);
    }
    Ok(p)
}

/// Outcome of one simulated walk.
#[derive(Debug, Clone)]
pub struct WalkRun {
    pub state: WalkState,
    /// Positions `X_0..X_n`, when requested.
    pub path: Option<Vec<i64>>,
    pub sites_created: u64,
}

impl WalkRun {
    /// CSV dump with columns `time,position`.
    pub fn write_path_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,position")?;
        if let Some(path) = &self.path {
            for (t, x) in path.iter().enumerate() {
                writeln!(out, "{t},{x}")?;
            }
        }
        Ok(())
    }
}

/// Simulate `steps` steps. The direct mode uses `stream`; the urn mode uses
/// per-site streams under `stream.master_seed ^ stream.stream_id`.
pub fn simulate_walk(wf: &WeightFunction, mode: WalkMode, steps: u64, stream: RngStream, record_path: bool) -> WalkRun {
    let mut state = WalkState::new();
    let mut path = record_path.then(|| {
        let mut v = Vec::with_capacity(steps as usize + 1);
        v.push(0);
        v
    });
    let mut sites_created = 0;
    match mode {
        WalkMode::Direct => {
            let mut rng = stream.generator();
            for _ in 0..steps {
                state.step_direct(wf, &mut rng);
                if let Some(p) = path.as_mut() {
                    p.push(state.position);
                }
            }
        }
        WalkMode::Urn => {
            let mut bank = SiteUrnBank::new(wf, crate::rng::splitmix64(stream.master_seed ^ stream.stream_id));
            for _ in 0..steps {
                state.step_urn(&mut bank);
                if let Some(p) = path.as_mut() {
                    p.push(state.position);
                }
            }
            sites_created = bank.sites_created();
        }
    }
    WalkRun {
        state,
        path,
        sites_created,
    }
}

/// All `2^len` step sequences, encoded from the bits of `0..2^len`.
pub fn all_paths(len: usize) -> impl Iterator<Item = Vec<i8>> {
    (0u32..1 << len).map(move |code| (0..len).map(|k| if code >> k & 1 == 1 { 1 } else { -1 }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn centered_vec_grows_both_ways() {
        let mut v: CenteredVec<u64> = CenteredVec::new();
        *v.get_mut(3) += 1;
        *v.get_mut(-7) += 2;
        *v.get_mut(10) += 5;
        assert_eq!(v.value(3), 1);
        assert_eq!(v.value(-7), 2);
        assert_eq!(v.value(10), 5);
        assert_eq!(v.value(0), 0);
        assert_eq!(v.value(1000), 0);
        let (lo, vals) = v.span();
        assert!(lo <= -7 && lo + vals.len() as i64 > 10);
        assert_eq!(vals.iter().sum::<u64>(), 8);
    }

    #[test]
    fn first_step_is_fair() {
        for wf in [WeightFunction::specific(2.0).unwrap(), WeightFunction::constant()] {
            assert_relative_eq!(WalkState::new().prob_right(&wf), 0.5);
            for mode in [WalkMode::Direct, WalkMode::Urn] {
                assert_relative_eq!(walk_path_prob(&[1], &wf, mode).unwrap(), 0.5);
                assert_relative_eq!(walk_path_prob(&[-1], &wf, mode).unwrap(), 0.5);
            }
        }
    }

    #[test]
    fn direct_probability_example() {
        let wf = WeightFunction::specific(1.0).unwrap();
        let mut st = WalkState::new();
        // l(0) = 2, l(-1) = 0 at X = 0: go right and come back.
        st.apply(1);
        st.apply(-1);
        assert_eq!(st.local_time(0), 2);
        assert_relative_eq!(st.prob_right(&wf), 0.25, max_relative = 1e-15);
    }

    #[test]
    fn constant_weights_are_fair_everywhere() {
        let wf = WeightFunction::constant();
        let mut st = WalkState::new();
        let mut rng = RngStream::new(4, 4).generator();
        for _ in 0..1000 {
            assert_eq!(st.prob_right(&wf), 0.5);
            st.step_direct(&wf, &mut rng);
        }
    }

    #[test]
    fn first_visit_right_of_origin() {
        let wf = WeightFunction::specific(1.5).unwrap();
        // path +1 then +1: second factor is the plus urn's first draw.
        let p = walk_path_prob(&[1, 1], &wf, WalkMode::Urn).unwrap();
        let expected = 0.5 * wf.weight(0) / (wf.weight(1) + wf.weight(0));
        assert_relative_eq!(p, expected, max_relative = 1e-14);
    }

    #[test]
    fn path_laws_sum_to_one_and_agree() {
        let wf = WeightFunction::specific(1.0).unwrap();
        let mut sums = [0.0; 2];
        for path in all_paths(10) {
            let d = walk_path_prob(&path, &wf, WalkMode::Direct).unwrap();
            let u = walk_path_prob(&path, &wf, WalkMode::Urn).unwrap();
            assert!((d - u).abs() <= 1e-12);
            sums[0] += d;
            sums[1] += u;
        }
        assert!((sums[0] - 1.0).abs() < 1e-12);
        assert!((sums[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn path_length_cap() {
        let wf = WeightFunction::specific(1.0).unwrap();
        let long = vec![1i8; MAX_EXACT_PATH_LEN + 1];
        assert!(matches!(
            walk_path_prob(&long, &wf, WalkMode::Direct),
            Err(Error::PathTooLong { .. })
        ));
        assert!(walk_path_prob(&[1, 0], &wf, WalkMode::Direct).is_err());
    }

    #[test]
    fn local_time_conservation_along_sampled_paths() {
        let wf = WeightFunction::perturbed(0.7, 0.3).unwrap();
        for mode in [WalkMode::Direct, WalkMode::Urn] {
            let mut st = WalkState::new();
            let mut bank = SiteUrnBank::new(&wf, 17);
            let mut rng = RngStream::new(17, 0).generator();
            for n in 1..=5000u64 {
                let before = st.clone();
                let step = match mode {
                    WalkMode::Direct => st.step_direct(&wf, &mut rng),
                    WalkMode::Urn => st.step_urn(&mut bank),
                };
                assert_eq!((st.position - before.position).abs(), 1);
                let edge = before.position.min(st.position);
                assert_eq!(st.local_time(edge), before.local_time(edge) + 1);
                assert_eq!(st.time, n);
                assert!(step == 1 || step == -1);
                if n % 500 == 0 {
                    assert_eq!(st.total_local_time(), n);
                }
            }
        }
    }

    #[test]
    fn urn_counts_match_local_times() {
        // At a site x > 0, a visit sees l(x) = 2R and l(x-1) = 2B + 1.
        let wf = WeightFunction::specific(1.0).unwrap();
        let mut st = WalkState::new();
        let mut bank = SiteUrnBank::new(&wf, 99);
        for _ in 0..20_000 {
            let x = st.position;
            if let Some(u) = bank.urn_state(x) {
                let (l_here, l_left) = (st.local_time(x), st.local_time(x - 1));
                match x.signum() {
                    1 => assert_eq!((l_here, l_left), (2 * u.reds, 2 * u.blues + 1)),
                    -1 => assert_eq!((l_here, l_left), (2 * u.reds + 1, 2 * u.blues)),
                    _ => assert_eq!((l_here, l_left), (2 * u.reds, 2 * u.blues)),
                }
            }
            st.step_urn(&mut bank);
        }
    }

    #[test]
    fn simulate_records_path_and_dumps() {
        let wf = WeightFunction::specific(1.0).unwrap();
        let run = simulate_walk(&wf, WalkMode::Urn, 100, RngStream::new(1, 0), true);
        let path = run.path.as_ref().unwrap();
        assert_eq!(path.len(), 101);
        assert_eq!(*path.last().unwrap(), run.state.position);
        assert!(run.sites_created >= 1);
        let mut buf = Vec::new();
        run.write_path_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("time,position\n0,0\n"));
        let mut buf = Vec::new();
        run.state.write_local_times_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let total: u64 = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, 100);
    }
}

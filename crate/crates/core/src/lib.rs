//! Generalized Pólya urns with weights `1/w(n) = n^alpha (1 + 2B/n + O(n^-2))`
//! and the polynomially self-repelling walks they generate.
//!
//! * [`weights`]: weight families and the odd/even series.
//! * [`urn`]: the urn chain, sequential and Rubin samplers, trajectories.
//! * [`walk`]: the walk, directly and as a composition of per-site urns.
//! * [`oracle`]: exact DP laws with certified truncation.
//! * [`stats`], [`checks`]: estimators and the limit-theorem checks.

pub mod checks;
pub mod error;
pub mod mc;
pub mod numeric;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod urn;
pub mod walk;
pub mod weights;

pub use error::{Error, Result};
pub use mc::MonteCarlo;
pub use oracle::{exact_after_n, exact_at_tau_blue, exact_tail, toth_identity_check, LatticeDistribution};
pub use rng::RngStream;
pub use stats::{streaming_moments, EstimateSummary, Method, TheoremVerdict};
pub use urn::{draw_rubin, draw_sequential, step_prob_red, Side, StopRule, UrnSpec, UrnState, UrnTrajectory};
pub use walk::{walk_path_prob, SiteUrnBank, WalkMode, WalkState};
pub use weights::{odd_even_series, Family, WeightFunction};

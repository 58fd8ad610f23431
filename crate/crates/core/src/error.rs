use thiserror::Error;

use crate::urn::UrnState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid weight function: {0}")]
    InvalidWeight(String),

    #[error("draw cap of {cap} exceeded before the stop rule was met (state {state:?})")]
    CapExceeded { cap: u64, state: UrnState },

    #[error("draw index {index} outside recorded trajectory ({reason})")]
    IndexOutOfRange { index: u64, reason: &'static str },

    #[error("path of length {len} exceeds the exact-enumeration cap of {cap}")]
    PathTooLong { len: usize, cap: usize },

    #[error("oracle size {requested} exceeds the configured cap of {cap}")]
    OracleCap { requested: u64, cap: u64 },

    #[error("truncation tolerance {tol:e} unreachable: best certified bound {achieved:e} at red cap {red_cap}")]
    ToleranceUnreachable { tol: f64, achieved: f64, red_cap: u64 },

    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the models, generators and simulators in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A queue whose utilization reaches 1 (within the stability guard).
    #[error("unstable queue: {what} utilization {utilization:.6} is not below 1")]
    UnstableQueue { what: &'static str, utilization: f64 },

    /// The offered load at a specific instant reaches or exceeds capacity.
    #[error("overloaded at t={t}: instantaneous load {load:.6} is not below 1")]
    OverloadedInstant { t: f64, load: f64 },

    /// A parameter outside its documented domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A closed form evaluated outside the domain of its inverse functions.
    #[error("domain error: {0}")]
    Domain(String),

    /// Backlog asked for a profile that never exceeds the service rate.
    #[error("no overload: peak arrival rate {peak} does not exceed service rate {mu_eff}")]
    NoOverload { peak: f64, mu_eff: f64 },

    /// Aggregating sinusoids that do not share an angular frequency.
    #[error("sites have different angular frequencies ({first} vs {other})")]
    IncompatiblePeriods { first: f64, other: f64 },

    /// A renewal family that cannot produce the requested variability.
    #[error("{family} cannot produce squared CoV {target}")]
    UnreachableScv { family: &'static str, target: f64 },

    /// A simulation configuration whose pieces do not fit together.
    #[error("configuration error: {0}")]
    Config(String),

    /// Unparseable input with the 1-based line it came from.
    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("trace {0} contains no VM requests")]
    EmptyTrace(PathBuf),

    #[error("VM {id} requests {cores} cores but servers only have {capacity}")]
    OversizedVm { id: String, cores: u32, capacity: u32 },

    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Rejects non-finite or non-positive values.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(invalid(name, format!("must be finite and >= 0, got {value}")))
    }
}

pub(crate) fn require_probability(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(invalid(name, format!("must lie in [0, 1], got {value}")))
    }
}

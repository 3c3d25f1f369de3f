//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::solver::IterationReport;

/// Failures raised by the numerical routines.
///
/// Variants split into two families: input validation (bad sizes, out of
/// range parameters, malformed labels) and numerical failures (resolution
/// violations, contraction failure, inversion failure). [`Error::is_numerical`]
/// tells them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch: expected {expected} values, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mode {mode:?} outside the grid range {range}")]
    ModeOutOfRange { mode: [i64; 2], range: String },

    #[error("unknown label `{label}`: {reason}")]
    UnknownLabel { label: String, reason: String },

    #[error("missing components: {}", .0.join(", "))]
    MissingComponents(Vec<String>),

    #[error("time {t} lies outside the window [{t0}, {t1}] or off the lattice")]
    TimeOutOfWindow { t: f64, t0: f64, t1: f64 },

    #[error("resolution violation: {0}")]
    Resolution(String),

    #[error("non-positive coefficient: minimum sampled value {min}")]
    NonPositiveCoefficient { min: f64 },

    #[error("inversion failed to reach tolerance {tol}: worst residual {worst}")]
    InversionFailed { tol: f64, worst: f64 },

    #[error("non-positive ratio {ratio} in row {row}")]
    NonPositiveRatio { row: usize, ratio: f64 },

    #[error("contraction failure: delta too large for this datum ({reason})")]
    ContractionFailure {
        reason: String,
        report: Box<IterationReport>,
    },

    #[error("fixed-point iteration did not converge within {max_iter} iterations")]
    NotConverged {
        max_iter: usize,
        report: Box<IterationReport>,
    },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Resolution(_)
                | Error::InversionFailed { .. }
                | Error::ContractionFailure { .. }
                | Error::NotConverged { .. }
                | Error::NonPositiveRatio { .. }
        )
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error type shared by all modeling and analysis modules.

use thiserror::Error;

/// Errors produced by validation, simulation, and analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter failed validation. Names the offending field.
    #[error("invalid {field}: {reason}")]
    InvalidField { field: String, reason: String },

    /// A quantity left its physical range (models a hard stop).
    #[error("{what} out of range: {value} not in [{min}, {max}]")]
    OutOfRange {
        what: String,
        value: f64,
        min: f64,
        max: f64,
    },

    /// Cable tension exceeded breaking strength.
    #[error("cable failure: tension {tension_n} N exceeds breaking strength {breaking_n} N")]
    CableFailure { tension_n: f64, breaking_n: f64 },

    /// A clutch with zero pretension never engages.
    #[error("clutch cannot self-engage: solenoid pretension is zero")]
    NoPretension,

    /// A protocol that cannot be executed as written.
    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    /// A trace that cannot be analyzed or was malformed on ingest.
    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    /// Efficiency is undefined when no energy was stored.
    #[error("efficiency undefined: trace contains no loading work")]
    UndefinedEfficiency,
}

impl Error {
    pub(crate) fn field(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidField {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Checks that `value` is finite and strictly positive.
pub(crate) fn require_positive(field: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::field(
            field,
            format!("must be finite and strictly positive, got {value}"),
        ));
    }
    Ok(())
}

/// Checks that `value` is finite and non-negative.
pub(crate) fn require_non_negative(field: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::field(
            field,
            format!("must be finite and non-negative, got {value}"),
        ));
    }
    Ok(())
}

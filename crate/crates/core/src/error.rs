use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("characterization data error: {0}")]
    Characterization(String),

    #[error("query ({speed}, {torque}) outside map '{label}' bounds")]
    OutOfRange {
        label: String,
        speed: f64,
        torque: f64,
    },

    #[error("query ({speed}, {torque}) touches an infeasible cell of map '{label}'")]
    InfeasibleRegion {
        label: String,
        speed: f64,
        torque: f64,
    },

    #[error("merged map is empty: feasible envelopes do not overlap")]
    EmptyMap,

    #[error("envelope exceeded at step {step}: {msg}")]
    Envelope { step: usize, msg: String },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("instance too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

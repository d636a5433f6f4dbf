use thiserror::Error;

/// Errors raised by the estimation, protocol and experiment layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("posterior cannot be renormalized: outcome has zero probability under the current distribution")]
    DegeneratePosterior,

    #[error("distribution has no preferred phase (first circular moment is zero)")]
    DegenerateEstimate,

    #[error("keep set is missing required harmonic index {0}")]
    MissingHarmonic(usize),

    #[error("phase increment table does not match schedule: {0}")]
    IncrementTable(String),

    #[error("protocol `{0}` requires a phase increment table")]
    MissingIncrements(&'static str),

    #[error("{0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

use thiserror::Error;

/// Errors raised by parameter validation and numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported squared Bessel dimension {0} (expected 0, 2 or 4)")]
    UnsupportedDimension(u32),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("quadrature did not converge: {0}")]
    Divergent(String),

    #[error("functional `{name}` has no closed form for {what}")]
    NoClosedForm { name: String, what: &'static str },

    #[error("inconsistent path state: {0}")]
    InconsistentState(String),

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("unknown functional `{0}`")]
    UnknownFunctional(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Fails unless `value` is finite and strictly positive.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

/// Fails unless `value` is finite and nonnegative.
pub(crate) fn require_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and >= 0, got {value}")))
    }
}

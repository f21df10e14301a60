use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Domain errors raised by the simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("coherence magnitude {0} lies outside [0, 1]")]
    CoherenceOutOfRange(f64),

    #[error("grid is not strictly increasing and nonnegative at index {0}")]
    InvalidGrid(usize),

    #[error("grid spacing {spacing} (in gamma*t) exceeds the feature-detection bound {max}")]
    GridTooCoarse { spacing: f64, max: f64 },

    #[error("{n} trajectories requested, at least {min} required")]
    InsufficientSamples { n: usize, min: usize },

    #[error("revival predicate is {value} at both g = {g_lo} and g = {g_hi}")]
    BracketInvalid { g_lo: f64, g_hi: f64, value: bool },

    #[error("protocol `{0}` has no trajectory estimator")]
    NoEstimator(&'static str),

    #[error("state with r = {r} is never entangled (r* = {r_star})")]
    NeverEntangled { r: f64, r_star: f64 },
}

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}

pub(crate) fn check_nonnegative(name: &'static str, value: f64) -> Result<f64> {
    check_finite(name, value)?;
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be nonnegative",
        })
    }
}

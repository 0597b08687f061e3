use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{field} = {value} is not an integer multiple of the per-block harvest rho = {rho}")]
    NonIntegerMultiple {
        field: &'static str,
        value: f64,
        rho: f64,
    },

    #[error("{field} out of range: {value} (expected {expected})")]
    NonPositive {
        field: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("{field} = {value} is not a probability in [0, 1)")]
    InvalidProbability { field: &'static str, value: f64 },

    #[error("energy grid needs {needed} nodes, cap is {cap}")]
    GridOverflow { needed: usize, cap: usize },

    #[error("simulation cannot make progress: {0}")]
    NoProgress(&'static str),

    #[error("no samples")]
    EmptySamples,

    #[error("channel given both as an outage probability and as link parameters")]
    ConflictingChannel,

    #[error("invalid tabulated density: {0}")]
    InvalidDensity(String),

    #[error("energy {0} uJ was not registered with the renewal table")]
    UnqueriedEnergy(f64),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input, as opposed to numeric limits or I/O.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NonIntegerMultiple { .. }
                | Error::NonPositive { .. }
                | Error::InvalidProbability { .. }
                | Error::NoProgress(_)
                | Error::ConflictingChannel
                | Error::InvalidDensity(_)
                | Error::Config(_)
        )
    }
}

pub(crate) fn positive(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositive {
            field,
            value,
            expected: "finite and > 0",
        })
    }
}

pub(crate) fn non_negative(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositive {
            field,
            value,
            expected: "finite and >= 0",
        })
    }
}

pub(crate) fn probability(field: &'static str, value: f64) -> Result<f64> {
    if (0.0..1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::InvalidProbability { field, value })
    }
}

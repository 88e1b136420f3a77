use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("SFWM gain |eta| = {magnitude} is outside the perturbative range (must be < {bound})")]
    GainOutOfRange { magnitude: f64, bound: f64 },

    #[error("no photon pair to post-select on (eta = 0)")]
    NoPair,

    #[error("{name} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid frequency pair: {0}")]
    Frequency(String),

    #[error("Jones vector has zero norm")]
    ZeroField,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("scenario parse error: {0}")]
    Scenario(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn range(name: &'static str, value: f64, min: f64, max: f64) -> Self {
        Error::OutOfRange {
            name,
            value,
            min,
            max,
        }
    }
}

/// Checks `value` lies in the closed interval `[min, max]` (and is not NaN).
pub(crate) fn check_range(name: &'static str, value: f64, min: f64, max: f64) -> Result<f64> {
    if value >= min && value <= max {
        Ok(value)
    } else {
        Err(Error::range(name, value, min, max))
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    check_range(name, value, 0.0, 1.0)
}

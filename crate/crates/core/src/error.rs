use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, DwptError>;

#[derive(Debug, Error)]
pub enum DwptError {
    /// A parameter violates a model invariant.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Evaluation point outside the domain of the function.
    #[error("{what} = {value} is outside [{lo}, {hi})")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// Peak demand too low for a periodic waveform; the load is constant.
    #[error("peak demand {peak_demand_kw} kW <= floor {floor_kw} kW: load is constant")]
    ConstantRegime { peak_demand_kw: f64, floor_kw: f64 },

    #[error("{0}")]
    Precondition(String),

    #[error("no root of the composition boundary in (0, {upper_m}) m")]
    NoRoot { upper_m: f64 },

    #[error("{0} is undefined: zero DC component")]
    ZeroDc(&'static str),

    #[error("zero first-harmonic power in scenario {0}")]
    ZeroHarmonicPower(u8),

    #[error("{path}: row {row}: {reason}")]
    Row {
        path: String,
        row: usize,
        reason: String,
    },

    #[error("segment of {segment} samples exceeds series of {len} samples")]
    SegmentTooLong { segment: usize, len: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl DwptError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        DwptError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DwptError::Io {
            path: path.into(),
            source,
        }
    }
}

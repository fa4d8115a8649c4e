use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode ({j1},{j2}) variant {variant}: {reason}")]
    InvalidMode {
        j1: usize,
        j2: usize,
        variant: u8,
        reason: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("period mismatch: {0} vs {1}")]
    PeriodMismatch(f64, f64),

    #[error("odd cutoff m={0}: the P_p/P_q split requires an even m")]
    OddCutoff(usize),

    #[error("grid of {grid} points per direction is too small, at least {required} are needed")]
    GridTooSmall { grid: usize, required: usize },

    #[error("support violation: {0}")]
    Support(String),

    #[error("non-finite state at step {step} (t = {time})")]
    NonFinite { step: usize, time: f64 },

    #[error("time {t} outside trajectory range [{start}, {end}]")]
    Extrapolation { t: f64, start: f64, end: f64 },

    #[error("level {level} failed: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics (blow-up, non-finite values) as
    /// opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFinite { .. } => true,
            Error::Level { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

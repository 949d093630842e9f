//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid network size: {0}")]
    InvalidSize(String),

    /// State blew past the divergence guard; carries the time of blow-up.
    #[error("state diverged (|Z| > {guard:e}) at t = {t}")]
    Divergence { t: f64, guard: f64 },

    #[error("NARMA iteration diverged (|A| > 10) at index {index}")]
    NarmaDivergence { index: usize },

    #[error("task generation failed: {0}")]
    TaskGeneration(String),

    #[error("time {t} outside drive schedule [0, {end})")]
    ScheduleOutOfRange { t: f64, end: f64 },

    #[error("delayed lookup at grid index {index} outside stored history window")]
    HistoryUnderflow { index: i64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A required data file is absent; the message carries a remediation hint.
    #[error("missing data: {0}")]
    MissingData(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("regression normal equations are numerically singular; retry with ridge > 0")]
    NumericalRank,

    #[error("spectral radius estimate did not converge after {0} iterations")]
    SpectralEstimate(usize),

    #[error("aggregate over empty cell set: {0}")]
    EmptyAggregate(String),

    #[error("insufficient overlap: {0}")]
    InsufficientOverlap(String),

    #[error("{0}")]
    Parse(String),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 missing/unusable data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::DimensionMismatch(_)
            | Error::InvalidSize(_)
            | Error::ScheduleOutOfRange { .. }
            | Error::Parse(_) => 2,
            Error::Io { .. }
            | Error::MissingData(_)
            | Error::InsufficientData(_)
            | Error::DegenerateData(_) => 3,
            Error::Divergence { .. }
            | Error::NarmaDivergence { .. }
            | Error::TaskGeneration(_)
            | Error::HistoryUnderflow { .. }
            | Error::UndefinedMetric(_)
            | Error::NumericalRank
            | Error::SpectralEstimate(_)
            | Error::EmptyAggregate(_)
            | Error::InsufficientOverlap(_) => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

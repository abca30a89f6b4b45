use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

use crate::econometrics::{ArimaFit, GarchFit};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Best parameters reached by an estimator that ran out of iterations.
#[derive(Debug, Clone)]
pub enum BestSoFar {
    Garch(GarchFit),
    Arima(ArimaFit),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("series for {ticker} has no rows")]
    EmptySeries { ticker: String },

    #[error("{ticker}: no valid rows left after cleaning")]
    EmptyAfterCleaning { ticker: String },

    #[error("{ticker}: required column `{column}` not found in header")]
    MissingColumn { ticker: String, column: String },

    #[error("{ticker}: close must be strictly positive on {date} (got {close})")]
    NonPositiveClose {
        ticker: String,
        date: NaiveDate,
        close: f64,
    },

    #[error("{ticker}: rows must be strictly increasing by date (offending date {date})")]
    UnorderedRows { ticker: String, date: NaiveDate },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),

    #[error("{ticker}: panel start {panel_start} is after first listing date {first_date}")]
    PanelStartAfterListing {
        ticker: String,
        panel_start: NaiveDate,
        first_date: NaiveDate,
    },

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("log-likelihood is not finite")]
    NonFiniteLikelihood,

    #[error("optimizer did not converge within {iterations} iterations")]
    ConvergenceFailure { iterations: usize, best: Box<BestSoFar> },

    #[error("GARCH persistence {persistence} is at or above the breakdown threshold")]
    Breakdown { persistence: f64 },

    #[error("baseline volatility must be positive (got {0})")]
    DegenerateBaseline(f64),

    #[error("series has zero variance")]
    DegenerateSeries,

    #[error("test statistic undefined: {0}")]
    UndefinedTest(&'static str),

    #[error("no records left to summarize")]
    EmptySample,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

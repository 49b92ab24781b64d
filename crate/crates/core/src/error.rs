use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported function id {0} (expected one of 1, 2, 5, 8, 9)")]
    UnsupportedFunction(u32),
    #[error("invalid dimension {0}")]
    InvalidDimension(usize),
    #[error("invalid domain: lower bound {lb} must be below upper bound {ub}")]
    InvalidDomain { lb: f64, ub: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite input coordinate at index {0}")]
    NonFiniteInput(usize),
    #[error("invalid plateau size {0}")]
    InvalidPlateauSize(f64),
    #[error("evaluation budget of {0} exhausted")]
    BudgetExhausted(u64),
    #[error("operation requires a plateau size but the problem is not discretized")]
    NotDiscretized,
    #[error("landscape grids support 1 or 2 dimensions, got {0}")]
    UnsupportedDimension(usize),
    #[error("budget {budget} is smaller than the offspring population size {lambda}")]
    BudgetTooSmall { budget: u64, lambda: usize },
    #[error("deviation parameter must be positive, got {0}")]
    InvalidDeviation(f64),
    #[error("invalid margin {0}")]
    InvalidMargin(f64),
    #[error("margin correction requires a discretized problem")]
    MarginRequiresDiscretization,
    #[error("degenerate marginal distribution in coordinate {coordinate} (scale {scale:e})")]
    DegenerateMarginal { coordinate: usize, scale: f64 },
    #[error("metric requested over an empty group of runs")]
    EmptyGroup,
    #[error("config syntax error: {0}")]
    ConfigSyntax(String),
    #[error("invalid config value for `{key}`: {reason}")]
    ConfigInvalid { key: String, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// `ConfigInvalid` for `key`.
    pub fn invalid(key: &str, reason: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter {point:?} outside chart domain")]
    Domain { point: Vec<f64> },

    #[error("model constraint violated: residual {residual:.3e} exceeds {tolerance:.1e}")]
    ModelConsistency { residual: f64, tolerance: f64 },

    #[error("degenerate first fundamental form at {point:?}")]
    Degenerate { point: Vec<f64> },

    #[error("normal frame rank deficiency: found {found} of {expected} normals")]
    Frame { found: usize, expected: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("integral curve left the domain at t = {exit_time:.6}")]
    DomainExit { exit_time: f64, last: Vec<f64> },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised anywhere in the calibration stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate influence trace: tr(I - A) = {trace} at lambda = {lambda}")]
    DegenerateTrace { lambda: f64, trace: f64 },

    #[error("every lambda in the grid produced a degenerate GCV score")]
    AllDegenerate,

    #[error("objective returned a non-finite value at {point:?}")]
    ObjectiveNonFinite { point: Vec<f64> },

    #[error("basis matrix is rank deficient under the weighted inner product")]
    RankDeficientBasis,

    #[error("system `{0}` has no known truth")]
    NoTruthAvailable(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("replicate {replicate} failed: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Parse {
            line,
            message: e.to_string(),
        }
    }
}

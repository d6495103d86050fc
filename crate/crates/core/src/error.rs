use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input table. `row` is the 1-based line number in the source
    /// text (the header is line 1).
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("probability {0} outside the open interval (0, 1)")]
    Domain(f64),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive semidefinite: {0}")]
    NotPositiveSemidefinite(String),

    /// A non-finite value showed up during optimization.
    #[error("numeric failure: {message}")]
    NumericFailure { message: String, last_iterate: Vec<f64> },

    #[error("solver did not converge for {model} at lambda = {lambda} (kkt residual {kkt_residual:e})")]
    NotConverged {
        model: String,
        lambda: f64,
        kkt_residual: f64,
    },

    #[error("Sharpe ratio undefined for zero-risk portfolio")]
    UndefinedSharpe,

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

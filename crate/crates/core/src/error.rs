use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("model is not stable: companion spectral radius {radius:.6} (must be < 1)")]
    Unstable { radius: f64 },

    #[error("rank-deficient regressors; offending channels: {}", channels.join(", "))]
    RankDeficient { channels: Vec<String> },

    #[error("insufficient data: need more than {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("unknown generator '{0}' (expected uni, bi or mix)")]
    UnknownGenerator(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("DARE did not converge after {iterations} iterations (last update {residual:.3e})")]
    DareNonConvergence { iterations: usize, residual: f64 },

    #[error("singular innovation covariance (min eigenvalue {min_eigenvalue:.3e})")]
    SingularInnovation { min_eigenvalue: f64 },

    #[error("DARE solution is not stabilizing: spectral radius of A - KC is {radius:.6}")]
    NotStabilizing { radius: f64 },

    #[error("channel '{0}' is constant")]
    ConstantSeries(String),

    #[error("time axis is not strictly monotone at row {row}")]
    NonMonotoneTime { row: usize },

    #[error("trend filter did not converge after {iterations} iterations (duality gap {gap:.3e})")]
    TrendFilterNonConvergence { iterations: usize, gap: f64 },

    #[error("CSV line {line}, column '{column}': {message}")]
    Parse {
        line: usize,
        column: String,
        message: String,
    },

    #[error("CSV: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with any context layers stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

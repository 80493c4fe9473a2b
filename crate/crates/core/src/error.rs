use thiserror::Error;

/// Errors produced by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular input: {0}")]
    Singular(String),

    #[error("AR coefficients {0:?} are not stationary")]
    NonStationary(Vec<f64>),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error(
        "training diverged at epoch {epoch} (total error {error}); try a smaller learning rate"
    )]
    Divergence { epoch: usize, error: f64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset has {rows} rows but {centers} centers were requested")]
    TooFewSamples { rows: usize, centers: usize },

    #[error("wind input of trace `{other}` differs from trace `{reference}`")]
    WindMismatch { reference: String, other: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        name,
        reason: reason.into(),
    }
}

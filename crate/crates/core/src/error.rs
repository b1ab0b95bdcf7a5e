use thiserror::Error;

/// Failures raised by construction, parsing and the decomposition pipelines.
///
/// Input-shaped problems (bad files, inconsistent dimensions) are separated from
/// mathematical failures so the CLI can map them to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("inhomogeneous projection at degree {degree}: leakage {leakage:.3e}")]
    Inhomogeneous { degree: String, leakage: f64 },
    #[error("degenerate summand: {0}")]
    Degenerate(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed or inconsistent input rather than by mathematics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Dimension(_) | Error::Input(_) | Error::Schema(_) | Error::Io(_) | Error::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("accuracy error: {what} (achieved residual {residual:.3e})")]
    Accuracy { what: String, residual: f64 },
    #[error("no convergence: {what} (last residual {residual:.3e})")]
    NoConvergence { what: String, residual: f64 },
    #[error("contour error: {0}")]
    Contour(String),
    #[error("model assumption violated: {0}")]
    Assumption(String),
    #[error("degenerate system: {0}")]
    Degenerate(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn accuracy(what: impl Into<String>, residual: f64) -> Self {
        Error::Accuracy { what: what.into(), residual }
    }

    /// Process exit status the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Accuracy { .. }
            | Error::NoConvergence { .. }
            | Error::Contour(_)
            | Error::Consistency(_)
            | Error::InsufficientData(_) => 2,
            Error::Assumption(_) | Error::Degenerate(_) => 3,
            Error::Domain(_) | Error::Usage(_) | Error::Invalid(_) => 1,
        }
    }
}

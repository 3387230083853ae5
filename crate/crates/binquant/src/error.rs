use crate::optim::CgTrace;

/// Crate-wide error type.
///
/// Optimizer termination by line-search failure is *not* an error at the
/// `cg_minimize` level (the current iterate is still returned); the variant
/// exists because `armijo_backtrack` reports it to its caller.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("line search failed: no step satisfied the sufficient-decrease condition after {backtracks} backtracks (smallest step {smallest_step:e})")]
    LineSearchFailure {
        backtracks: usize,
        smallest_step: f64,
    },

    #[error("numerical failure: {message}")]
    NumericalFailure {
        message: String,
        trace: Box<CgTrace>,
    },

    #[error("format error in {path}: {message}")]
    Format { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn format(path: &std::path::Path, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.display().to_string(),
            message: message.into(),
        }
    }
}

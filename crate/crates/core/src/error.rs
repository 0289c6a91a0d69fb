use thiserror::Error;

/// Error type for every fallible library operation.
///
/// Variants map onto process exit codes through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("convergence error: {message} (iterations={iterations}, residual={residual:e})")]
    Convergence {
        message: String,
        iterations: usize,
        residual: f64,
    },
    #[error("search error: {0}")]
    Search(String),
    #[error("state error: {0}")]
    State(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("leakage guard violated: {0}")]
    Leakage(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// 1 usage, 2 data, 3 convergence, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) => 1,
            Error::Data(_) | Error::Io { .. } => 2,
            Error::Convergence { .. } | Error::Search(_) => 3,
            Error::State(_) | Error::Numeric(_) | Error::Leakage(_) => 4,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

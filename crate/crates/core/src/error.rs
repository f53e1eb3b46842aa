use std::path::PathBuf;

/// Errors raised anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A value violated a type invariant (probability vector, loss range, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// An algorithm parameter is outside its legal range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The experiment configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke an operation's precondition (e.g. a negative loss fed to a forecaster).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Something that cannot happen for valid state did happen.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("script {path}: line {line}: {msg}")]
    Script {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 2 for configuration problems, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Internal(_) => 1,
            _ => 2,
        }
    }
}

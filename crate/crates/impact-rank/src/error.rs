use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A malformed record; `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },
    #[error(transparent)]
    Core(#[from] impact_rank_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(path: &Path, line: u64, message: impl ToString) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            line,
            message: message.to_string(),
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

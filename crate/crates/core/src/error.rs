use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("feature selection error: {0}")]
    Selection(String),

    #[error("training error: {0}")]
    Train(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("placement error: {0}")]
    Placement(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by malformed or inconsistent input data, as
    /// opposed to configuration problems or internal failures.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidLabel(_)
                | Error::MissingData(_)
                | Error::Alignment(_)
                | Error::Selection(_)
                | Error::Train(_)
                | Error::Data(_)
                | Error::Metric(_)
                | Error::Placement(_)
                | Error::Parse { .. }
                | Error::Io { .. }
                | Error::Json(_)
        )
    }
}

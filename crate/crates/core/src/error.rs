use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the pipeline.
///
/// Variants fall into two classes, see [`Error::is_input_error`]: problems
/// reading or decoding inputs, and analysis failures on well-formed data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty document")]
    EmptyDocument,
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("no documents survive filtering")]
    NoDocumentsSurvive,
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("at least {needed} documents are required, got {got}")]
    TooFewDocuments { needed: usize, got: usize },
    #[error("selection eliminated all features")]
    SelectionEmpty,
    #[error("feature `{0}` has zero standard deviation")]
    ZeroVariance(String),
    #[error("document `{0}` has no signal under selected features")]
    ZeroRow(String),
    #[error("MinMax undefined between `{0}` and `{1}`: both rows are all-zero")]
    MinMaxUndefined(String, String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("document ids differ between assignment and truth: {0:?}")]
    LabelMismatch(Vec<String>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), message: message.into() }
    }

    /// True for I/O and input-format failures, false for analysis failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::EmptyDocument
                | Error::Format { .. }
                | Error::Csv(_)
                | Error::Json(_)
                | Error::DuplicateId(_)
        )
    }
}

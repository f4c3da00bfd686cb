use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::{Category, RelationType};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed document. `locus` is `file:line:column` when known.
    #[error("parse error at {locus}: {message}")]
    Parse { locus: String, message: String },

    /// A well-formed document that breaks a data-model rule.
    #[error("validation error in {locus}: {rule}")]
    Validation { locus: String, rule: String },

    #[error("index cutoff mismatch ({0} vs {1})")]
    CutoffMismatch(i32, i32),

    #[error("papers present in both indexes: {0:?}")]
    OverlappingPapers(Vec<String>),

    #[error("bad or truncated file {locus}: {message}")]
    FormatVersion { locus: String, message: String },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("attention over an empty sequence")]
    EmptySequence,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("no model for category {0}")]
    MissingModel(Category),

    #[error("no phrase pattern for relation {0}")]
    UnsupportedRelation(RelationType),

    #[error("template error: {0}")]
    Template(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn validation(locus: impl Into<String>, rule: impl Into<String>) -> Self {
        Error::Validation { locus: locus.into(), rule: rule.into() }
    }

    pub(crate) fn format(locus: impl Into<String>, message: impl Into<String>) -> Self {
        Error::FormatVersion { locus: locus.into(), message: message.into() }
    }

    pub(crate) fn from_json(locus: &str, err: serde_json::Error) -> Self {
        Error::Parse {
            locus: format!("{locus}:{}:{}", err.line(), err.column()),
            message: err.to_string(),
        }
    }
}

use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("malformed header: missing columns {missing:?}, unexpected columns {unexpected:?}")]
    Header { missing: Vec<String>, unexpected: Vec<String> },

    #[error("input is not valid UTF-8 (byte {offset})")]
    Encoding { offset: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("bibtex syntax error at byte {offset}: {message}")]
    Bibtex { offset: usize, message: String },

    #[error("unknown study id {0:?}")]
    UnknownStudy(String),

    #[error("unknown criterion {0:?}")]
    UnknownCriterion(String),

    #[error("unknown column {0:?}")]
    UnknownColumn(String),

    #[error("invalid alias map for {criterion:?}: {message}")]
    Alias { criterion: String, message: String },

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),

    #[error("embedding provider failed: {0}")]
    Embedding(EmbeddingFailure),

    #[error("empty vocabulary: no tokens in any abstract")]
    EmptyVocabulary,

    #[error("similarity matrix {0:?} has not been computed")]
    MatrixAbsent(String),

    #[error("unknown review entry {0:?}")]
    UnknownReview(String),

    #[error("{} record violation(s); first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Validation(Vec<crate::validate::Violation>),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Per-text outcome of a failed embedding batch.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFailure {
    pub provider: String,
    pub statuses: Vec<TextStatus>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TextStatus {
    Ok,
    Cached,
    Failed(String),
}

impl fmt::Display for EmbeddingFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed = self.statuses.iter().filter(|s| matches!(s, TextStatus::Failed(_))).count();
        write!(f, "{}: {failed} of {} texts failed", self.provider, self.statuses.len())
    }
}

use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::Pos;

pub type Result<T> = std::result::Result<T, WsiError>;

#[derive(Debug, Error)]
pub enum WsiError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("duplicate instance id `{0}`")]
    DuplicateId(String),

    #[error("line {line}: target span [{start}, {end}] out of bounds for {len} tokens")]
    SpanOutOfBounds {
        line: usize,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("invalid instance `{id}`: {message}")]
    InvalidInstance { id: String, message: String },

    #[error("not enough instances for {pos}: need {target}, have {available}")]
    InsufficientInstances {
        pos: Pos,
        target: usize,
        available: usize,
    },

    #[error("cannot split {pos}: {message}")]
    DegenerateSplit { pos: Pos, message: String },

    #[error("instance `{0}` has no gold label")]
    MissingGold(String),

    #[error("coverage mismatch: {missing_in_system:?} missing from system, {missing_in_gold:?} missing from gold")]
    CoverageMismatch {
        missing_in_system: Vec<String>,
        missing_in_gold: Vec<String>,
    },

    #[error("gold standard is graded for `{0}`; a hard gold standard is required")]
    GradedGold(String),

    #[error("no weight given for part of speech {0}")]
    UnknownPos(Pos),

    #[error("invalid aggregation input: {0}")]
    InvalidAggregate(String),

    #[error("malformed property scenario: {0}")]
    MalformedScenario(String),

    #[error("invalid EMB1 data: {0}")]
    Embedding(String),

    #[error("missing embeddings for {} instance(s): {ids:?}", ids.len())]
    MissingEmbeddings { ids: Vec<String> },

    #[error("non-finite component in vector of `{0}`")]
    NonFinite(String),

    #[error("invalid clustering request: {0}")]
    InvalidClustering(String),

    #[error("lexicon entry required for {0}")]
    LexiconRequired(String),

    #[error("instance id collision while merging: `{0}`")]
    IdCollision(String),

    #[error("prompt job has no sentences")]
    EmptyPrompt,

    #[error("generation service error: {0}")]
    Client(String),

    #[error("system `{0}` is not deterministic")]
    NonDeterministic(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl WsiError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        WsiError::Io {
            path: path.into(),
            source,
        }
    }
}

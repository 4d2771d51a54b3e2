use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum QcError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed corpus line {line}: {msg}")]
    MalformedLine { line: usize, msg: String },
    #[error("unknown {layer} label '{label}' (line {line})")]
    UnknownLabel {
        layer: &'static str,
        label: String,
        line: usize,
    },
    #[error("fine label '{fine}' does not belong to coarse class '{coarse}' (line {line})")]
    LabelMismatch {
        fine: String,
        coarse: String,
        line: usize,
    },
    #[error("duplicate record id '{id}' (line {line})")]
    DuplicateId { id: String, line: usize },
    #[error("record '{id}' has empty text")]
    EmptyText { id: String },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid feature config: {0}")]
    InvalidFeatureConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("need at least {need} classes, got {got}")]
    TooFewClasses { need: usize, got: usize },
    #[error("k={k} exceeds number of stored rows n={n}")]
    KnnKTooLarge { k: usize, n: usize },
    #[error("negative feature value {value} at row {row}")]
    NegativeFeature { row: usize, value: f64 },
    #[error("class '{0}' has no training rows")]
    EmptyClass(String),
    #[error("unsupported model artifact version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model artifact: {0}")]
    CorruptArtifact(String),
    #[error("fold count k={0} must be at least 2")]
    BadFoldCount(usize),
    #[error("fold {fold}: {source}")]
    FoldError {
        fold: usize,
        #[source]
        source: Box<QcError>,
    },
    #[error("benchmark: {0}")]
    Bench(String),
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, QcError>;

impl QcError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        QcError::Io {
            path: path.into(),
            source,
        }
    }
}

use thiserror::Error;

/// Errors produced anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ingestion error at line {line}: {message}")]
    Ingestion { line: usize, message: String },

    #[error("unknown table '{0}'")]
    UnknownTable(String),

    #[error("unknown column '{0}'")]
    UnknownColumn(String),

    #[error("table '{0}' is already registered")]
    DuplicateTable(String),

    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("type mismatch: {0}")]
    TypeMismatch(String),

    #[error("unsupported predicate: {0}")]
    UnsupportedPredicate(String),

    #[error("unsupported query: {0}")]
    UnsupportedQuery(String),

    #[error("invalid statistics: {0}")]
    InvalidStatistics(String),

    #[error("invalid synopsis parameters: {0}")]
    InvalidParams(String),

    #[error("row cap exceeded: operator produced {produced} rows (cap {cap})")]
    RowCapExceeded { produced: u64, cap: u64 },

    #[error("generator error: {0}")]
    Generator(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

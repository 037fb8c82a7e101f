use std::path::PathBuf;

/// Errors produced by the lab.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("index out of range: {what} {index} >= {bound}")]
    Index {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input")]
    EmptyInput,

    #[error("duplicate rating for user {user} item {item} at line {line}")]
    DuplicateRating {
        user: String,
        item: String,
        line: usize,
    },

    #[error("invalid rating triple: {0}")]
    InvalidTriple(String),

    #[error("infeasible spec: {0}")]
    InfeasibleSpec(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-positive dot product {dot} at user {user}, item {item}")]
    NonPositiveDot { user: usize, item: usize, dot: f64 },

    #[error("degenerate pair (user {user}, item {item}): dot {dot} below floor {epsilon}")]
    DegeneratePair {
        user: usize,
        item: usize,
        dot: f64,
        epsilon: f64,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: Option<PathBuf>,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<std::io::Error> for Error {
    fn from(source: std::io::Error) -> Self {
        Error::Io { path: None, source }
    }
}

impl Error {
    pub(crate) fn io_at(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: Some(path.into()),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

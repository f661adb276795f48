use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("no labels")]
    NoLabels,

    #[error("no documents")]
    NoDocuments,

    #[error("duplicate document id '{0}'")]
    DuplicateId(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate training fold: {0}")]
    DegenerateFold(String),

    #[error("cannot stratify: {0}")]
    CannotStratify(String),

    #[error("row has {got} features, model expects {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{path}:{line}: {message}")]
    Input {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

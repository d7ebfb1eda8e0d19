use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] echoscope_core::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("user {0} has an empty history")]
    EmptyHistory(String),

    #[error("no token reaches document frequency {min_df}; lower the cutoff")]
    EmptyVocabulary { min_df: usize },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("{class} has {found} examples, {needed} folds need at least that many")]
    TooFewExamples {
        class: &'static str,
        found: usize,
        needed: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported model format version {0}")]
    ModelVersion(u32),
}

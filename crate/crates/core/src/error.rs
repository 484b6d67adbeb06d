use thiserror::Error;

use crate::data::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(ValidationReport),

    #[error("fold count must be at least 2, got {0}")]
    TooFewFolds(usize),

    #[error("empty {0} set")]
    EmptyView(&'static str),

    #[error("feature width mismatch: model expects {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("learner {learner}: {message}")]
    Learner { learner: String, message: String },

    #[error("at least 2 paired differences are required, got {0}")]
    TooFewPairs(usize),

    #[error("duplicate dataset name {0:?}")]
    DuplicateDataset(String),

    #[error("job id collision between {0} and {1}")]
    JobIdCollision(String, String),

    #[error("unknown dataset {0:?} referenced by manifest")]
    UnknownDataset(String),

    #[error("unknown learner {0:?}")]
    UnknownLearner(String),

    #[error("{0}")]
    Parse(String),

    #[error("nothing to plot")]
    NothingToPlot,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

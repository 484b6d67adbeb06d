//! Same/Other/All K-fold cross-validation.
//!
//! Tests whether a classifier trained on other subsets of a data set (or on
//! all of it) predicts a held-out subset as accurately as one trained on
//! that subset alone.

mod clock;
pub mod data;
pub mod engine;
pub mod error;
pub mod io;
pub mod learners;
pub mod plot;
pub mod resampling;
pub mod stats;
pub mod synth;

pub use data::{meta_summary, validate, DataView, Dataset, Matrix, MetaSummary, ValidationReport, Violation};
pub use engine::{execute, plan, plan_with_folds, ExecuteOptions, ExecuteReport, RunManifest};
pub use error::{Error, Result};
pub use learners::{FittedModel, Learner, LearnerKind, LearnerSpec};
pub use resampling::{
    assign_folds, assign_folds_with, enumerate_splits, resolve_split, FoldAssignment, SplitSpec, Stratify,
    TrainPolicy, DEFAULT_FOLDS,
};
pub use stats::{
    error_table, paired_ttest, soak_compare, summarize_dataset, Comparison, DatasetSummary, EvalRecord,
    Similarity, SubsetComparison,
};

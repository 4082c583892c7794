//! Evaluation harness: dataset enumeration, genuine/impostor scoring, EER,
//! revocability and unlinkability statistics, timing and reports.

mod dataset;
mod report;
mod scores;
mod security;
mod stats;
mod timing;

pub use dataset::{scan_dataset, Dataset, Identity, Sample, Skipped};
pub use report::{evaluate, EvalOptions, EvalReport};
pub use scores::{gen_scores, Protocol, ScoreSet};
pub use security::{
    revocability_test, seed_pairs, unlinkability_test, RevocabilityStats, UnlinkabilityStats,
};
pub use stats::{
    accuracy_loss, compute_eer, eer_from_roc, mean, roc, rounding_note, std_dev, RocPoint,
};
pub use timing::{timing_report, TimingStats};

use crate::matching::MatchError;
use crate::template::TemplateError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset root {0} holds no readable identities")]
    EmptyRoot(PathBuf),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("score lists must be non-empty")]
    EmptyScores,
    #[error("score {0} is not a finite value in [0, 1]")]
    InvalidScore(f64),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

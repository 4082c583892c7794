//! Cancelable palmprint templates.
//!
//! A palmprint image is turned into two fixed-length code vectors: a 12-level
//! line-orientation code per cell and an LBP code at one representative
//! interest point per block. The codes are fused into a real vector and
//! hashed with seeded Index-of-Max hashing, giving a template that can be
//! matched directly and revoked by changing the seed.
//!
//! ```
//! use palmiom::{synth_palm, Config, Pipeline, SynthSpec, post_transform_score};
//!
//! let pipeline = Pipeline::new(Config { iom_l: 32, ..Config::default() }).unwrap();
//! let img = synth_palm(&SynthSpec::default(), 0, 0);
//! let a = pipeline.enroll(&img, 7).unwrap();
//! let b = pipeline.enroll(&img, 7).unwrap();
//! assert_eq!(post_transform_score(&a, &b).unwrap().value(), 1.0);
//! ```

pub mod config;
pub mod eval;
pub mod imaging;
pub mod keypoints;
pub mod matching;
pub mod orientation;
pub mod pipeline;
pub mod seed;
pub mod template;

pub use config::{Config, ConfigError};
pub use eval::{
    accuracy_loss, compute_eer, gen_scores, revocability_test, scan_dataset, timing_report,
    unlinkability_test, Dataset, EvalError, EvalReport, Protocol, ScoreSet,
};
pub use imaging::{load_pgm, save_pgm, synth_palm, GrayImage, ImagingError, PgmError, SynthSpec};
pub use keypoints::{HessianParams, Keypoint, KeypointError, PointFeature};
pub use matching::{
    angular_dist, collision_rate, post_transform_score, pre_transform_score, MatchConfig,
    MatchError, PlainFeatures, Score,
};
pub use orientation::{FusionParams, OrientationError, OrientationFeature, OrientationMap};
pub use pipeline::Pipeline;
pub use seed::parse_seed;
pub use template::{
    deserialize, serialize, CodecError, FusedFeature, FusionMode, IomParams, ProjectionBank,
    RevocableTemplate, TemplateError,
};

use thiserror::Error;

/// Any failure along the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Pgm(#[from] PgmError),
    #[error(transparent)]
    Orientation(#[from] OrientationError),
    #[error(transparent)]
    Keypoint(#[from] KeypointError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

//! Detection of paid posters ("water army" accounts) in news-comment corpora.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! * [`corpus`]: ingest comment records, clean them, group them per user.
//! * [`features`]: behavioral features (reply ratio, epoch-based posting
//!   interval, active days, number of reports).
//! * [`semantics`]: content-word segmentation and similar-comment-pair counts.
//! * [`svm`]: RBF-kernel C-SVC trained with SMO, cross-validation, persistence.
//! * [`eval`]: confusion matrix and precision / recall / F-measure / accuracy.
//! * [`synth`]: labeled synthetic corpora drawn from per-class marginals.
//! * [`cli`]: the batch command-line driver.
//!
//! Per-user stages are data-parallel. With the default `parallel` feature
//! they run on rayon; without it every [`Execution`] falls back to a plain
//! sequential loop with identical results.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod parallel;
pub mod semantics;
pub mod svm;
pub mod synth;
pub mod time;

pub use corpus::{CleaningConfig, CommentRecord, Corpus, Label, UserProfile};
pub use error::{Error, Result};
pub use eval::{ConfusionMatrix, Metrics};
pub use features::{FeatureConfig, FeatureMask, FeatureVector, UserFeatures};
pub use parallel::Execution;
pub use semantics::{ContentWordList, Segmenter, SimilarityConfig};
pub use svm::{SvmModel, TrainConfig};
pub use synth::{SynthConfig, SyntheticCorpus};
pub use time::{TimeZone, Timestamp};

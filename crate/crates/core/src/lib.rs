//! Scoring and ranking of data-augmentation schemes for distillation-assisted
//! quantization-aware training.
//!
//! A fixed full-precision teacher is run over an augmented dataset. From its
//! softmax outputs we estimate, per candidate augmentation:
//!
//! - the contextual mutual information (CMI, or its generalized form GCMI when
//!   labels are mixed by CutMix/MixUp), i.e. how much the teacher's predictions
//!   vary around their class prototype;
//! - the centroid deviation (DEV), i.e. how far each class prototype drifts
//!   from its one-hot ground truth;
//! - the combined score `M = DEV - CMI`, lower is better.
//!
//! No student model is trained. The crate also ships the augmentation
//! pipeline, a closed-form synthetic teacher, tie-aware Spearman validation
//! and the file formats shared with external inference tooling.

pub mod augment;
pub mod error;
pub mod image;
pub mod io;
pub mod metric;
pub mod prob;
pub mod ranking;
pub mod rng;
pub mod summation;
pub mod synth;

pub use augment::{AugmentOp, AugmentationSpec, AugmentedSample, BatchOp, TrivialPolicy};
pub use error::{Error, Result};
pub use image::Image;
pub use io::ImageDataset;
pub use metric::{
    ClassPrototypes, EmptyClassPolicy, LabelMode, MetricOptions, MetricReport, PredictionRecord, PredictionSet,
    RecordSource, ReplicaGroups, VarianceMode,
};
pub use prob::{kl_divergence, normalize, one_hot, LabelWeights, ProbVector, EPSILON};
pub use ranking::{RankingEntry, RankingReport};
pub use synth::SyntheticTeacher;

/// Tool version embedded in every written report.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

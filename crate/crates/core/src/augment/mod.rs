//! Seeded augmentation pipeline.
//!
//! An [`AugmentationSpec`] is an ordered list of per-image operations, an
//! optional trivial policy and an optional batch-level mix. Each augmented
//! draw `(sample, replica)` gets its own generator from
//! [`rng::seed_for`](crate::rng::seed_for), so the stream can be replayed, or
//! any single element regenerated, without touching the others.

pub mod mix;
pub mod ops;
pub mod policy;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::ImageDataset;
use crate::prob::LabelWeights;
use crate::rng::{self, SampleRng};

pub use mix::{CutBox, Mixed};
pub use policy::{TrivialOp, TrivialPolicy};

fn default_flip_p() -> f64 {
    0.5
}

fn default_pad() -> usize {
    ops::DEFAULT_CROP_PAD
}

fn unit_range() -> [f64; 2] {
    [1.0, 1.0]
}

fn default_cutout_fraction() -> f64 {
    0.5
}

fn default_alpha() -> f64 {
    mix::DEFAULT_ALPHA
}

/// A randomized per-image operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AugmentOp {
    /// Horizontal flip with probability `p`.
    RandomFlip {
        #[serde(default = "default_flip_p")]
        p: f64,
    },
    /// Zero padding then a random crop back to the original size.
    RandomCrop {
        #[serde(default = "default_pad")]
        pad: usize,
    },
    /// Factors drawn uniformly from each `[lo, hi]` range.
    ColorJitter {
        #[serde(default = "unit_range")]
        brightness: [f64; 2],
        #[serde(default = "unit_range")]
        contrast: [f64; 2],
        #[serde(default = "unit_range")]
        saturation: [f64; 2],
    },
    /// Rotation by a random non-zero multiple of 90 degrees.
    RandomRotate,
    /// Square erase with side up to `max_fraction` of the shorter side.
    Cutout {
        #[serde(default = "default_cutout_fraction")]
        max_fraction: f64,
    },
}

impl AugmentOp {
    fn validate(&self) -> Result<()> {
        match *self {
            AugmentOp::RandomFlip { p } if !(0.0..=1.0).contains(&p) => {
                Err(Error::InvalidSpec(format!("flip probability {p} outside [0, 1]")))
            }
            AugmentOp::ColorJitter { brightness, contrast, saturation } => {
                let (min, max) = ops::JITTER_FACTOR_LIMITS;
                for (name, [lo, hi]) in [("brightness", brightness), ("contrast", contrast), ("saturation", saturation)]
                {
                    if !(min <= lo && lo <= hi && hi <= max) {
                        return Err(Error::InvalidSpec(format!(
                            "{name} range [{lo}, {hi}] must be ordered and within [{min}, {max}]"
                        )));
                    }
                }
                Ok(())
            }
            AugmentOp::Cutout { max_fraction } if !(max_fraction > 0.0 && max_fraction <= 1.0) => {
                Err(Error::InvalidSpec(format!("cutout fraction {max_fraction} outside (0, 1]")))
            }
            _ => Ok(()),
        }
    }

    pub fn apply<R: Rng + ?Sized>(&self, img: &Image, rng: &mut R) -> Result<Image> {
        match *self {
            AugmentOp::RandomFlip { p } => Ok(if rng.random_bool(p) { ops::horizontal_flip(img) } else { img.clone() }),
            AugmentOp::RandomCrop { pad } => {
                let ox = rng.random_range(0..=2 * pad);
                let oy = rng.random_range(0..=2 * pad);
                ops::crop_pad(img, pad, ox, oy)
            }
            AugmentOp::ColorJitter { brightness, contrast, saturation } => {
                let b = policy::uniform(brightness, rng);
                let c = policy::uniform(contrast, rng);
                let s = policy::uniform(saturation, rng);
                ops::color_jitter(img, b, c, s)
            }
            AugmentOp::RandomRotate => TrivialPolicy::default().apply_op(TrivialOp::Rotate, img, rng),
            AugmentOp::Cutout { max_fraction } => {
                TrivialPolicy { max_cutout_fraction: max_fraction, ..Default::default() }.apply_op(
                    TrivialOp::Cutout,
                    img,
                    rng,
                )
            }
        }
    }
}

/// Mixing of two dataset images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum BatchOp {
    #[serde(rename = "cutmix")]
    CutMix {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    #[serde(rename = "mixup")]
    MixUp {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
}

/// A named candidate augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    pub name: String,
    #[serde(default)]
    pub ops: Vec<AugmentOp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<TrivialPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<BatchOp>,
}

impl AugmentationSpec {
    pub fn identity(name: impl Into<String>) -> Self {
        Self { name: name.into(), ops: Vec::new(), policy: None, batch: None }
    }

    pub fn with_ops(name: impl Into<String>, ops: Vec<AugmentOp>) -> Self {
        Self { ops, ..Self::identity(name) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidSpec("empty name".into()));
        }
        for op in &self.ops {
            op.validate()?;
        }
        if let Some(p) = &self.policy {
            let (min, max) = ops::JITTER_FACTOR_LIMITS;
            if !(min <= p.jitter[0] && p.jitter[0] <= p.jitter[1] && p.jitter[1] <= max) {
                return Err(Error::InvalidSpec(format!("policy jitter range {:?}", p.jitter)));
            }
            if !(p.max_cutout_fraction > 0.0 && p.max_cutout_fraction <= 1.0) {
                return Err(Error::InvalidSpec(format!("policy cutout fraction {}", p.max_cutout_fraction)));
            }
        }
        if let Some(BatchOp::CutMix { alpha } | BatchOp::MixUp { alpha }) = self.batch {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::InvalidSpec(format!("beta alpha {alpha} must be positive")));
            }
        }
        Ok(())
    }

    /// Per-image part of the pipeline: ops in order, then the policy.
    fn view(&self, img: &Image, rng: &mut SampleRng) -> Result<Image> {
        let mut out = img.clone();
        for op in &self.ops {
            out = op.apply(&out, rng)?;
        }
        if let Some(p) = &self.policy {
            out = p.apply(&out, rng)?;
        }
        Ok(out)
    }

    /// The fixed family scored by the synthetic demo.
    pub fn demo_family() -> Vec<AugmentationSpec> {
        let jitter = |name: &str, b: [f64; 2], c: [f64; 2], s: [f64; 2]| {
            Self::with_ops(name, vec![AugmentOp::ColorJitter { brightness: b, contrast: c, saturation: s }])
        };
        vec![
            Self::identity("identity"),
            Self::with_ops("flip", vec![AugmentOp::RandomFlip { p: 0.5 }]),
            Self::with_ops("crop_pad", vec![AugmentOp::RandomCrop { pad: ops::DEFAULT_CROP_PAD }]),
            jitter("jitter_weak", [0.9, 1.1], [0.9, 1.1], [0.9, 1.1]),
            jitter("jitter_strong", [0.5, 1.5], [0.5, 1.5], [0.0, 0.05]),
            AugmentationSpec { batch: Some(BatchOp::CutMix { alpha: 1.0 }), ..Self::identity("cutmix") },
            AugmentationSpec { batch: Some(BatchOp::MixUp { alpha: 1.0 }), ..Self::identity("mixup") },
            AugmentationSpec { policy: Some(TrivialPolicy::default()), ..Self::identity("trivial") },
        ]
    }

    /// Random crop, random flip and mild color jitter.
    pub fn minimal() -> Self {
        Self::with_ops(
            "minimal",
            vec![
                AugmentOp::RandomCrop { pad: ops::DEFAULT_CROP_PAD },
                AugmentOp::RandomFlip { p: 0.5 },
                AugmentOp::ColorJitter { brightness: [0.8, 1.2], contrast: [0.8, 1.2], saturation: [0.8, 1.2] },
            ],
        )
    }

    /// Every spec shipped with the crate.
    pub fn shipped() -> Vec<AugmentationSpec> {
        let mut all = Self::demo_family();
        all.push(Self::minimal());
        all
    }
}

/// One augmented draw.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSample {
    /// Unique within the stream: `source * replicas + replica_index`.
    pub id: u64,
    pub image: Image,
    pub labels: LabelWeights,
    /// The base image, then the mixing partner if a batch op fired.
    pub source_ids: Vec<u64>,
    pub replica_index: u32,
}

impl AugmentedSample {
    pub fn source(&self) -> u64 {
        self.source_ids[0]
    }
}

/// Stream id of `(sample, replica)`.
pub fn stream_id(sample: usize, replica: u32, replicas: u32) -> u64 {
    sample as u64 * replicas as u64 + replica as u64
}

/// Regenerates the augmented draw of one `(sample, replica)`.
pub fn augment_sample(
    spec: &AugmentationSpec,
    dataset: &ImageDataset,
    global_seed: u64,
    sample: usize,
    replica: u32,
    replicas: u32,
) -> Result<AugmentedSample> {
    let mut rng = rng::sample_rng(global_seed, sample as u64, replica);
    let image = spec.view(dataset.image(sample), &mut rng)?;
    let labels = dataset.label_weights(sample)?;
    let id = stream_id(sample, replica, replicas);
    let Some(batch) = &spec.batch else {
        return Ok(AugmentedSample { id, image, labels, source_ids: vec![sample as u64], replica_index: replica });
    };

    // The partner is taken in its own per-image view for the same replica.
    let partner = rng.random_range(0..dataset.len());
    let mut partner_rng = rng::sample_rng(global_seed, partner as u64, replica);
    let partner_image = spec.view(dataset.image(partner), &mut partner_rng)?;
    let partner_labels = dataset.label_weights(partner)?;
    let a = (&image, &labels);
    let b = (&partner_image, &partner_labels);
    let mixed = match *batch {
        BatchOp::CutMix { alpha } => mix::cutmix_pair(a, b, alpha, &mut rng)?,
        BatchOp::MixUp { alpha } => mix::mixup_pair(a, b, alpha, &mut rng)?,
    };
    Ok(AugmentedSample {
        id,
        image: mixed.image,
        labels: mixed.labels,
        source_ids: vec![sample as u64, partner as u64],
        replica_index: replica,
    })
}

/// Replayable stream of augmented draws in `(sample, replica)` order.
pub struct AugmentStream<'a> {
    spec: &'a AugmentationSpec,
    dataset: &'a ImageDataset,
    global_seed: u64,
    replicas: u32,
    samples: Vec<usize>,
    position: usize,
}

impl AugmentStream<'_> {
    /// Total number of draws.
    pub fn total(&self) -> usize {
        self.samples.len() * self.replicas as usize
    }
}

impl Iterator for AugmentStream<'_> {
    type Item = Result<AugmentedSample>;

    fn next(&mut self) -> Option<Self::Item> {
        let r = self.replicas as usize;
        let sample = *self.samples.get(self.position / r)?;
        let replica = (self.position % r) as u32;
        self.position += 1;
        Some(augment_sample(self.spec, self.dataset, self.global_seed, sample, replica, self.replicas))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.total() - self.position;
        (left, Some(left))
    }
}

/// Augments every image `replicas` times.
pub fn apply<'a>(
    spec: &'a AugmentationSpec,
    dataset: &'a ImageDataset,
    global_seed: u64,
    replicas: u32,
) -> Result<AugmentStream<'a>> {
    apply_subset(spec, dataset, (0..dataset.len()).collect(), global_seed, replicas)
}

/// Augments the listed images only; partners are still drawn from the whole
/// dataset.
pub fn apply_subset<'a>(
    spec: &'a AugmentationSpec,
    dataset: &'a ImageDataset,
    samples: Vec<usize>,
    global_seed: u64,
    replicas: u32,
) -> Result<AugmentStream<'a>> {
    spec.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidParameter("empty dataset".into()));
    }
    if replicas == 0 {
        return Err(Error::InvalidParameter("replicas must be at least 1".into()));
    }
    if let Some(&bad) = samples.iter().find(|&&s| s >= dataset.len()) {
        return Err(Error::IndexOutOfRange { index: bad, num_classes: dataset.len() });
    }
    Ok(AugmentStream { spec, dataset, global_seed, replicas, samples, position: 0 })
}

//! Closed-form teacher and synthetic datasets.
//!
//! The teacher sees only the mean color of an image and scores each class by
//! the squared distance to that class's color. Its output under flips, crops,
//! jitter and mixing can therefore be predicted by hand, which makes
//! end-to-end runs checkable without any trained network.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{to_byte, Image, CHANNELS};
use crate::io::ImageDataset;
use crate::prob::ProbVector;
use crate::rng;

/// Side length of synthetic images.
pub const SYNTHETIC_SIDE: usize = 32;

/// `num_classes` distinct colors: the eight RGB cube corners first (black,
/// white, red, cyan, green, magenta, blue, yellow), then points of
/// successively finer lattices over the cube in lexicographic order.
pub fn default_palette(num_classes: usize) -> Vec<[u8; 3]> {
    let mut palette: Vec<[u8; 3]> = vec![
        [0, 0, 0],
        [255, 255, 255],
        [255, 0, 0],
        [0, 255, 255],
        [0, 255, 0],
        [255, 0, 255],
        [0, 0, 255],
        [255, 255, 0],
    ];
    let mut levels = 3usize;
    while palette.len() < num_classes {
        let step = |i: usize| (i as f64 * 255.0 / (levels - 1) as f64).round() as u8;
        for r in 0..levels {
            for g in 0..levels {
                for b in 0..levels {
                    let color = [step(r), step(g), step(b)];
                    if !palette.contains(&color) {
                        palette.push(color);
                    }
                }
            }
        }
        levels += 1;
    }
    palette.truncate(num_classes);
    palette
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTeacher {
    class_colors: Vec<[u8; 3]>,
    sharpness: f64,
}

impl SyntheticTeacher {
    pub fn new(class_colors: Vec<[u8; 3]>, sharpness: f64) -> Result<Self> {
        if class_colors.len() < 2 {
            return Err(Error::InvalidParameter("teacher needs at least two classes".into()));
        }
        if !(sharpness > 0.0 && sharpness.is_finite()) {
            return Err(Error::InvalidParameter(format!("sharpness {sharpness} must be positive")));
        }
        for (i, a) in class_colors.iter().enumerate() {
            if class_colors[..i].contains(a) {
                return Err(Error::InvalidParameter(format!("class color {a:?} repeated")));
            }
        }
        Ok(Self { class_colors, sharpness })
    }

    pub fn with_default_palette(num_classes: usize, sharpness: f64) -> Result<Self> {
        Self::new(default_palette(num_classes), sharpness)
    }

    pub fn num_classes(&self) -> usize {
        self.class_colors.len()
    }

    pub fn class_colors(&self) -> &[[u8; 3]] {
        &self.class_colors
    }

    pub fn sharpness(&self) -> f64 {
        self.sharpness
    }

    /// Softmax of `-sharpness * |mean_rgb - color_c|^2`, colors scaled to `[0, 1]`.
    pub fn predict(&self, img: &Image) -> ProbVector {
        let mean = img.mean_rgb().map(|v| v / 255.0);
        let logits: Vec<f64> = self
            .class_colors
            .iter()
            .map(|color| {
                let d2: f64 = (0..CHANNELS).map(|c| (mean[c] - color[c] as f64 / 255.0).powi(2)).sum();
                -self.sharpness * d2
            })
            .collect();
        ProbVector::softmax(&logits).expect("logits are finite")
    }
}

/// `per_class` images per class of the palette color plus Gaussian pixel
/// noise, class-major order.
pub fn make_synthetic_dataset(num_classes: usize, per_class: usize, noise_std: f64, seed: u64) -> Result<ImageDataset> {
    make_synthetic_dataset_sized(num_classes, per_class, noise_std, seed, SYNTHETIC_SIDE, SYNTHETIC_SIDE)
}

pub fn make_synthetic_dataset_sized(
    num_classes: usize,
    per_class: usize,
    noise_std: f64,
    seed: u64,
    width: usize,
    height: usize,
) -> Result<ImageDataset> {
    if num_classes < 2 || per_class < 1 {
        return Err(Error::InvalidParameter(format!(
            "synthetic dataset needs >= 2 classes and >= 1 image per class, got {num_classes} x {per_class}"
        )));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise std {noise_std}")));
    }
    let palette = default_palette(num_classes);
    let noise = Normal::new(0.0, noise_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = rng::named_rng(seed, "synthetic-dataset");
    let plane = width * height;

    let mut images = Vec::with_capacity(num_classes * per_class);
    let mut labels = Vec::with_capacity(num_classes * per_class);
    for (class, color) in palette.iter().enumerate() {
        for _ in 0..per_class {
            let image = if noise_std == 0.0 {
                Image::filled(width, height, *color)
            } else {
                let mut pixels = Vec::with_capacity(plane * CHANNELS);
                for &base in color {
                    pixels.extend((0..plane).map(|_| to_byte(base as f64 + noise.sample(&mut rng))));
                }
                Image::new(width, height, pixels)?
            };
            images.push(image);
            labels.push(class);
        }
    }
    ImageDataset::new(images, labels, num_classes)
}

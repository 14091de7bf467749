//! TrivialAugment-style sampling: one operation drawn uniformly from a fixed
//! set, applied once with a uniformly drawn strength.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ops;
use crate::error::Result;
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrivialOp {
    Identity,
    HorizontalFlip,
    CropPad,
    Brightness,
    Contrast,
    Saturation,
    Rotate,
    Cutout,
}

impl TrivialOp {
    pub const ALL: [TrivialOp; 8] = [
        TrivialOp::Identity,
        TrivialOp::HorizontalFlip,
        TrivialOp::CropPad,
        TrivialOp::Brightness,
        TrivialOp::Contrast,
        TrivialOp::Saturation,
        TrivialOp::Rotate,
        TrivialOp::Cutout,
    ];
}

/// Strength ranges of the trivial policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrivialPolicy {
    pub pad: usize,
    pub jitter: [f64; 2],
    /// Largest cutout side as a fraction of the shorter image side.
    pub max_cutout_fraction: f64,
}

impl Default for TrivialPolicy {
    fn default() -> Self {
        Self { pad: ops::DEFAULT_CROP_PAD, jitter: ops::DEFAULT_JITTER_RANGE, max_cutout_fraction: 0.5 }
    }
}

impl TrivialPolicy {
    /// Draws the operation, then its strength, and applies it.
    pub fn apply<R: Rng + ?Sized>(&self, img: &Image, rng: &mut R) -> Result<Image> {
        let op = TrivialOp::ALL[rng.random_range(0..TrivialOp::ALL.len())];
        self.apply_op(op, img, rng)
    }

    /// Applies `op` with a strength drawn from `rng`.
    pub fn apply_op<R: Rng + ?Sized>(&self, op: TrivialOp, img: &Image, rng: &mut R) -> Result<Image> {
        let jitter = |rng: &mut R| uniform(self.jitter, rng);
        match op {
            TrivialOp::Identity => Ok(img.clone()),
            TrivialOp::HorizontalFlip => Ok(ops::horizontal_flip(img)),
            TrivialOp::CropPad => {
                let ox = rng.random_range(0..=2 * self.pad);
                let oy = rng.random_range(0..=2 * self.pad);
                ops::crop_pad(img, self.pad, ox, oy)
            }
            TrivialOp::Brightness => ops::color_jitter(img, jitter(rng), 1.0, 1.0),
            TrivialOp::Contrast => ops::color_jitter(img, 1.0, jitter(rng), 1.0),
            TrivialOp::Saturation => ops::color_jitter(img, 1.0, 1.0, jitter(rng)),
            TrivialOp::Rotate => {
                let turns = if img.width() == img.height() { rng.random_range(1..=3) } else { 2 };
                ops::rotate90(img, turns)
            }
            TrivialOp::Cutout => {
                let max_side = ((img.width().min(img.height()) as f64 * self.max_cutout_fraction) as usize).max(1);
                let side = rng.random_range(1..=max_side);
                let cx = rng.random_range(0..img.width());
                let cy = rng.random_range(0..img.height());
                Ok(ops::cutout(img, cx, cy, side))
            }
        }
    }
}

pub(crate) fn uniform<R: Rng + ?Sized>(range: [f64; 2], rng: &mut R) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..=range[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::sample_rng;

    fn ramp() -> Image {
        Image::new(8, 8, (0..192).map(|i| (i * 5 % 256) as u8).collect()).unwrap()
    }

    /// First sample id whose generator draws `op` first.
    fn seed_forcing(op: TrivialOp) -> u64 {
        (0..1000)
            .find(|&id| TrivialOp::ALL[sample_rng(0, id, 0).random_range(0..8)] == op)
            .expect("some seed picks every op")
    }

    #[test]
    fn forced_identity_leaves_image() {
        let img = ramp();
        let mut rng = sample_rng(0, seed_forcing(TrivialOp::Identity), 0);
        assert_eq!(TrivialPolicy::default().apply(&img, &mut rng).unwrap(), img);
    }

    #[test]
    fn forced_flip_dispatches() {
        let img = ramp();
        let mut rng = sample_rng(0, seed_forcing(TrivialOp::HorizontalFlip), 0);
        assert_eq!(TrivialPolicy::default().apply(&img, &mut rng).unwrap(), ops::horizontal_flip(&img));
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let img = ramp();
        let p = TrivialPolicy::default();
        for id in 0..50 {
            let a = p.apply(&img, &mut sample_rng(9, id, 0)).unwrap();
            let b = p.apply(&img, &mut sample_rng(9, id, 0)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.dims(), img.dims());
        }
    }

    #[test]
    fn every_op_preserves_dimensions() {
        let p = TrivialPolicy::default();
        let wide = Image::new(6, 4, (0..72).map(|i| i as u8).collect()).unwrap();
        let mut rng = sample_rng(1, 1, 1);
        for op in TrivialOp::ALL {
            for _ in 0..10 {
                assert_eq!(p.apply_op(op, &wide, &mut rng).unwrap().dims(), (6, 4));
            }
        }
    }
}

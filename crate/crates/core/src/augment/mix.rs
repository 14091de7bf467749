//! CutMix and MixUp. The mixed label is `lambda * y_a + (1 - lambda) * y_b`
//! where, for CutMix, `lambda` is recomputed from the pixel count of the
//! pasted rectangle after clipping.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::image::{to_byte, Image, CHANNELS};
use crate::prob::LabelWeights;

/// Default Beta concentration of the mixing coefficient.
pub const DEFAULT_ALPHA: f64 = 1.0;

/// Output of a pairwise mix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixed {
    pub image: Image,
    pub labels: LabelWeights,
    /// Weight of the first image in the label.
    pub lambda: f64,
}

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl CutBox {
    /// Rectangle of side `dim * sqrt(1 - lambda)` centered at `(cx, cy)`,
    /// clipped to the image.
    pub fn from_lambda(width: usize, height: usize, lambda: f64, cx: usize, cy: usize) -> Self {
        let ratio = (1.0 - lambda).max(0.0).sqrt();
        let cut_w = (width as f64 * ratio).floor() as usize;
        let cut_h = (height as f64 * ratio).floor() as usize;
        CutBox {
            x0: cx.saturating_sub(cut_w / 2).min(width),
            y0: cy.saturating_sub(cut_h / 2).min(height),
            x1: (cx + cut_w / 2).min(width),
            y1: (cy + cut_h / 2).min(height),
        }
    }

    pub fn area(&self) -> usize {
        self.x1.saturating_sub(self.x0) * self.y1.saturating_sub(self.y0)
    }
}

pub fn sample_lambda<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if alpha == 1.0 {
        return Ok(rng.random::<f64>());
    }
    let beta = Beta::new(alpha, alpha).map_err(|e| Error::InvalidParameter(format!("beta({alpha}): {e}")))?;
    Ok(beta.sample(rng))
}

/// Pastes `b`'s pixels inside `cut` into `a`.
pub fn cutmix_with_box(a: &Image, la: &LabelWeights, b: &Image, lb: &LabelWeights, cut: CutBox) -> Result<Mixed> {
    a.same_dims(b)?;
    let (w, h) = a.dims();
    let mut image = a.clone();
    for c in 0..CHANNELS {
        for y in cut.y0..cut.y1.min(h) {
            for x in cut.x0..cut.x1.min(w) {
                image.set(x, y, c, b.get(x, y, c));
            }
        }
    }
    let lambda = 1.0 - cut.area() as f64 / (w * h) as f64;
    let labels = la.mix(lb, lambda)?;
    Ok(Mixed { image, labels, lambda })
}

/// Draws `lambda ~ Beta(alpha, alpha)` and a uniform box center.
pub fn cutmix_pair<R: Rng + ?Sized>(
    a: (&Image, &LabelWeights),
    b: (&Image, &LabelWeights),
    alpha: f64,
    rng: &mut R,
) -> Result<Mixed> {
    a.0.same_dims(b.0)?;
    let (w, h) = a.0.dims();
    let lambda = sample_lambda(alpha, rng)?;
    let cx = rng.random_range(0..w);
    let cy = rng.random_range(0..h);
    cutmix_with_box(a.0, a.1, b.0, b.1, CutBox::from_lambda(w, h, lambda, cx, cy))
}

/// Per-pixel blend `round(lambda * a + (1 - lambda) * b)`.
pub fn mixup_with(a: &Image, la: &LabelWeights, b: &Image, lb: &LabelWeights, lambda: f64) -> Result<Mixed> {
    a.same_dims(b)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("mixup lambda {lambda}")));
    }
    let pixels = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&pa, &pb)| to_byte(lambda * pa as f64 + (1.0 - lambda) * pb as f64))
        .collect();
    let image = Image::new(a.width(), a.height(), pixels)?;
    Ok(Mixed { image, labels: la.mix(lb, lambda)?, lambda })
}

pub fn mixup_pair<R: Rng + ?Sized>(
    a: (&Image, &LabelWeights),
    b: (&Image, &LabelWeights),
    alpha: f64,
    rng: &mut R,
) -> Result<Mixed> {
    a.0.same_dims(b.0)?;
    let lambda = sample_lambda(alpha, rng)?;
    mixup_with(a.0, a.1, b.0, b.1, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::one_hot;
    use crate::rng::sample_rng;

    #[test]
    fn sixteen_square_patch_on_32() {
        let a = Image::filled(32, 32, [10, 10, 10]);
        let b = Image::filled(32, 32, [200, 200, 200]);
        let cut = CutBox { x0: 8, y0: 8, x1: 24, y1: 24 };
        let m = cutmix_with_box(&a, &one_hot(0, 3).unwrap(), &b, &one_hot(2, 3).unwrap(), cut).unwrap();
        assert_eq!(m.lambda, 0.75);
        assert_eq!(m.labels.weights(), &[0.75, 0.0, 0.25]);
        assert_eq!(m.image.pixels().iter().filter(|&&p| p == 200).count(), 3 * 256);
    }

    #[test]
    fn degenerate_box_keeps_a() {
        let a = Image::filled(4, 4, [1, 2, 3]);
        let b = Image::filled(4, 4, [7, 8, 9]);
        let la = one_hot(1, 2).unwrap();
        let cut = CutBox::from_lambda(4, 4, 1.0, 2, 2);
        assert_eq!(cut.area(), 0);
        let m = cutmix_with_box(&a, &la, &b, &one_hot(0, 2).unwrap(), cut).unwrap();
        assert_eq!(m.image, a);
        assert_eq!(m.labels, la);
    }

    #[test]
    fn self_mix_is_identity() {
        let a = Image::filled(8, 8, [5, 6, 7]);
        let la = one_hot(1, 3).unwrap();
        let mut rng = sample_rng(3, 0, 0);
        for _ in 0..20 {
            let m = cutmix_pair((&a, &la), (&a, &la), 1.0, &mut rng).unwrap();
            assert_eq!(m.image, a);
            assert_eq!(m.labels, la);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let a = Image::zeros(4, 4);
        let b = Image::zeros(4, 5);
        let l = one_hot(0, 2).unwrap();
        let mut rng = sample_rng(0, 0, 0);
        assert!(matches!(cutmix_pair((&a, &l), (&b, &l), 1.0, &mut rng), Err(Error::DimensionMismatch(..))));
        assert!(matches!(mixup_pair((&a, &l), (&b, &l), 1.0, &mut rng), Err(Error::DimensionMismatch(..))));
    }

    #[test]
    fn mixup_examples() {
        let a = Image::filled(2, 2, [100, 100, 100]);
        let b = Image::filled(2, 2, [200, 200, 200]);
        let la = one_hot(0, 2).unwrap();
        let lb = one_hot(1, 2).unwrap();

        let m = mixup_with(&a, &la, &b, &lb, 1.0).unwrap();
        assert_eq!(m.image, a);
        assert_eq!(m.labels, la);

        let m = mixup_with(&a, &la, &b, &lb, 0.5).unwrap();
        assert!(m.image.pixels().iter().all(|&p| p == 150));

        let m = mixup_with(&a, &la, &b, &lb, 0.7).unwrap();
        assert!((m.labels.weights()[0] - 0.7).abs() < 1e-15);
        assert!((m.labels.weights()[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn beta_lambda_in_unit_interval() {
        let mut rng = sample_rng(1, 2, 3);
        for alpha in [0.2, 1.0, 2.0] {
            for _ in 0..100 {
                let l = sample_lambda(alpha, &mut rng).unwrap();
                assert!((0.0..=1.0).contains(&l));
            }
        }
        assert!(sample_lambda(-1.0, &mut rng).is_err());
    }
}

//! Probability vectors, label weights and KL divergence.
//!
//! Divergences are in nats. The second argument of [`kl_divergence`] is
//! clamped from below at [`EPSILON`] so that predictions rounded to zero in a
//! text dump still give a finite divergence against a one-hot label.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation;

/// Lower clamp applied to the reference distribution before taking logs.
pub const EPSILON: f64 = 1e-12;

/// Accepted deviation of a raw vector's sum from 1 at construction.
pub const CONSTRUCTION_TOLERANCE: f64 = 1e-6;

/// Deviation from 1 below which a vector is left untouched by [`normalize`].
/// Keeps normalization idempotent bit for bit.
pub const NORMALIZED_TOLERANCE: f64 = 1e-12;

fn check_entries(values: &[f64]) -> Result<()> {
    for (index, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if v < 0.0 {
            return Err(Error::NegativeEntry { index, value: v });
        }
    }
    Ok(())
}

fn rescale(mut values: Vec<f64>) -> Result<Vec<f64>> {
    let total = summation::sum(&values);
    if total <= 0.0 {
        return Err(Error::AllZero);
    }
    if (total - 1.0).abs() > NORMALIZED_TOLERANCE {
        values.iter_mut().for_each(|v| *v /= total);
    }
    Ok(values)
}

/// Scales a non-negative vector so its entries sum to 1.
pub fn normalize(values: &[f64]) -> Result<ProbVector> {
    check_entries(values)?;
    rescale(values.to_vec()).map(ProbVector)
}

/// A softmax output over `C` classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Accepts vectors summing to 1 within 1e-6 and renormalizes them.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_entries(&values)?;
        let total = summation::sum(&values);
        if (total - 1.0).abs() > CONSTRUCTION_TOLERANCE {
            return Err(Error::NotNormalized { sum: total });
        }
        rescale(values).map(ProbVector)
    }

    pub fn uniform(num_classes: usize) -> Self {
        ProbVector(vec![1.0 / num_classes as f64; num_classes])
    }

    /// Numerically stable softmax of a logit vector.
    pub fn softmax(logits: &[f64]) -> Result<Self> {
        if let Some(index) = logits.iter().position(|l| !l.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        rescale(exps).map(ProbVector)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for ProbVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Ground-truth label mass over classes: one-hot, or mixed by a batch-level
/// augmentation such as CutMix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelWeights(Vec<f64>);

impl LabelWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        ProbVector::new(weights).map(|p| LabelWeights(p.0))
    }

    /// Builds a label from sparse `(class, weight)` pairs. Repeated classes
    /// accumulate.
    pub fn from_pairs(num_classes: usize, pairs: &[(usize, f64)]) -> Result<Self> {
        let mut weights = vec![0.0; num_classes];
        for &(class, w) in pairs {
            if class >= num_classes {
                return Err(Error::IndexOutOfRange { index: class, num_classes });
            }
            weights[class] += w;
        }
        Self::new(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The hot class, if exactly one entry equals 1.
    pub fn one_hot_class(&self) -> Option<usize> {
        let mut hot = None;
        for (c, &w) in self.0.iter().enumerate() {
            if w == 1.0 {
                if hot.is_some() {
                    return None;
                }
                hot = Some(c);
            } else if w != 0.0 {
                return None;
            }
        }
        hot
    }

    pub fn is_one_hot(&self) -> bool {
        self.one_hot_class().is_some()
    }

    /// Non-zero entries as `(class, weight)` in class order.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.0.iter().copied().enumerate().filter(|&(_, w)| w != 0.0)
    }

    /// `lambda * self + (1 - lambda) * other`. Identical inputs are returned
    /// unchanged.
    pub fn mix(&self, other: &LabelWeights, lambda: f64) -> Result<LabelWeights> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found: other.len() });
        }
        if self == other {
            return Ok(self.clone());
        }
        let rest = 1.0 - lambda;
        let mixed = self.0.iter().zip(&other.0).map(|(a, b)| lambda * a + rest * b).collect();
        LabelWeights::new(mixed)
    }
}

impl AsRef<[f64]> for LabelWeights {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// One-hot label for `class_index` out of `num_classes`.
pub fn one_hot(class_index: usize, num_classes: usize) -> Result<LabelWeights> {
    if class_index >= num_classes {
        return Err(Error::IndexOutOfRange { index: class_index, num_classes });
    }
    let mut w = vec![0.0; num_classes];
    w[class_index] = 1.0;
    Ok(LabelWeights(w))
}

/// `KL(p || q)` in nats with `q` clamped at [`EPSILON`].
pub fn kl_divergence<P: AsRef<[f64]> + ?Sized>(p: &P, q: &ProbVector) -> Result<f64> {
    let p = p.as_ref();
    if p.len() != q.len() {
        return Err(Error::LengthMismatch { expected: p.len(), found: q.len() });
    }
    Ok(kl_unchecked(p, q.values()))
}

/// Divergence kernel shared by the metric engine. Slices must have equal
/// length.
#[inline]
pub(crate) fn kl_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = summation::NeumaierSum::new();
    for (&pc, &qc) in p.iter().zip(q) {
        if pc > 0.0 {
            acc.add(pc * (pc / qc.max(EPSILON)).ln());
        }
    }
    acc.value().max(0.0)
}

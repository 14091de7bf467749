#![allow(dead_code)]

use augrank_core::prob::{one_hot, LabelWeights, ProbVector};
use augrank_core::{PredictionRecord, PredictionSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random softmax-like vector with a few sharp and a few flat entries.
pub fn random_probs<R: Rng>(rng: &mut R, c: usize) -> ProbVector {
    let logits: Vec<f64> = (0..c).map(|_| rng.random_range(-4.0..4.0)).collect();
    ProbVector::softmax(&logits).unwrap()
}

/// One-hot set with every class present when `n >= c`.
pub fn random_one_hot_set<R: Rng>(rng: &mut R, c: usize, n: usize) -> PredictionSet {
    let records = (0..n)
        .map(|i| {
            let y = if i < c { i } else { rng.random_range(0..c) };
            PredictionRecord::new(i as u64, one_hot(y, c).unwrap(), random_probs(rng, c)).unwrap()
        })
        .collect();
    PredictionSet::new(c, records).unwrap()
}

/// Mixture of one-hot and two-class mixed labels.
pub fn random_mixed_set<R: Rng>(rng: &mut R, c: usize, n: usize) -> PredictionSet {
    let records = (0..n)
        .map(|i| {
            let labels = if i < c {
                one_hot(i, c).unwrap()
            } else {
                let a = rng.random_range(0..c);
                let b = rng.random_range(0..c);
                let lambda: f64 = rng.random();
                one_hot(a, c).unwrap().mix(&one_hot(b, c).unwrap(), lambda).unwrap()
            };
            PredictionRecord::new(i as u64, labels, random_probs(rng, c)).unwrap()
        })
        .collect();
    PredictionSet::new(c, records).unwrap()
}

pub fn labels_of(set: &PredictionSet) -> Vec<LabelWeights> {
    set.records().iter().map(|r| r.labels.clone()).collect()
}

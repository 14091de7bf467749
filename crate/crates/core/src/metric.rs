//! Class prototypes, CMI / GCMI, centroid deviation and the combined score.
//!
//! For a prediction set `D` with `N` records over `C` classes:
//!
//! ```text
//! Z_j     = sum_k w_jk * P_k                    (label-weighted prediction mass)
//! Q_j     = Z_j / |Z_j|_1                       (class prototype)
//! Q^i     = sum_j w_ji * Q_j                    (per-record mixed target)
//! GCMI    = 1/N sum_i KL(P_i || Q^i)            (CMI when every label is one-hot)
//! DEV     = 1/C sum_y KL(1_y || Q_y) = 1/C sum_y -ln Q_y[y]
//! M       = DEV - GCMI
//! ```
//!
//! Everything is computed in two passes: the first accumulates `Z_j` (and the
//! per-group means of the variance baseline), the second accumulates the
//! divergence and variance terms. The in-memory entry point [`metric_m`] and
//! the streaming entry point [`two_pass_stream`] share the same accumulators
//! and the same chunked reduction, so they agree to the last bit regardless
//! of the number of worker threads.

use std::collections::{HashMap, HashSet};

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{kl_unchecked, LabelWeights, ProbVector, EPSILON};
use crate::rng;
use crate::summation::{ChunkedSum, NeumaierSum, CHUNK};

/// One teacher prediction with its (possibly mixed) ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: u64,
    pub labels: LabelWeights,
    pub probs: ProbVector,
}

impl PredictionRecord {
    pub fn new(id: u64, labels: LabelWeights, probs: ProbVector) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::LengthMismatch { expected: labels.len(), found: probs.len() });
        }
        Ok(Self { id, labels, probs })
    }

    /// Teacher probability mass on the ground truth, `sum_c w_c * P_c`.
    pub fn true_class_mass(&self) -> f64 {
        self.labels.nonzero().map(|(c, w)| w * self.probs.values()[c]).collect::<NeumaierSum>().value()
    }
}

/// Teacher predictions over one augmented dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    num_classes: usize,
    records: Vec<PredictionRecord>,
}

impl PredictionSet {
    pub fn new(num_classes: usize, records: Vec<PredictionRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.labels.len() != num_classes {
                return Err(Error::LengthMismatch { expected: num_classes, found: r.labels.len() });
            }
            if r.probs.len() != num_classes {
                return Err(Error::LengthMismatch { expected: num_classes, found: r.probs.len() });
            }
            if !seen.insert(r.id) {
                return Err(Error::DuplicateId(r.id));
            }
        }
        Ok(Self { num_classes, records })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<PredictionRecord> {
        self.records
    }

    pub fn all_one_hot(&self) -> bool {
        self.records.iter().all(|r| r.labels.is_one_hot())
    }
}

/// Raw accumulators `Z_j` and the normalized prototypes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPrototypes {
    raw: Vec<Vec<f64>>,
    normalized: Vec<Option<ProbVector>>,
    mass: Vec<f64>,
    empty_classes: Vec<usize>,
}

impl ClassPrototypes {
    pub fn num_classes(&self) -> usize {
        self.raw.len()
    }

    pub fn raw(&self, class: usize) -> &[f64] {
        &self.raw[class]
    }

    /// `Z_j / |Z_j|_1`, or `None` for a class without label mass.
    pub fn normalized(&self, class: usize) -> Option<&ProbVector> {
        self.normalized[class].as_ref()
    }

    /// `|Z_j|_1`.
    pub fn mass(&self, class: usize) -> f64 {
        self.mass[class]
    }

    pub fn empty_classes(&self) -> &[usize] {
        &self.empty_classes
    }

    fn prototype(&self, class: usize) -> Result<&ProbVector> {
        self.normalized(class).ok_or(Error::EmptyClass { class })
    }
}

#[derive(Debug, Clone)]
struct PrototypeAccumulator {
    raw: Vec<Vec<NeumaierSum>>,
}

impl PrototypeAccumulator {
    fn new(num_classes: usize) -> Self {
        Self { raw: vec![vec![NeumaierSum::new(); num_classes]; num_classes] }
    }

    fn add(&mut self, record: &PredictionRecord) {
        let probs = record.probs.values();
        for (j, w) in record.labels.nonzero() {
            for (acc, &p) in self.raw[j].iter_mut().zip(probs) {
                acc.add(w * p);
            }
        }
    }

    fn finish(self) -> ClassPrototypes {
        let raw: Vec<Vec<f64>> = self.raw.into_iter().map(|row| row.iter().map(NeumaierSum::value).collect()).collect();
        let mass: Vec<f64> = raw.iter().map(|row| crate::summation::sum(row)).collect();
        let mut empty_classes = Vec::new();
        let normalized = raw
            .iter()
            .zip(&mass)
            .enumerate()
            .map(|(j, (row, &m))| {
                if m > 0.0 {
                    // Rows of valid records are finite and non-negative.
                    crate::prob::normalize(row).ok()
                } else {
                    empty_classes.push(j);
                    None
                }
            })
            .collect();
        ClassPrototypes { raw, normalized, mass, empty_classes }
    }
}

/// Accumulates `Z_j` over the records in order.
pub fn compute_class_prototypes(preds: &PredictionSet) -> ClassPrototypes {
    let mut acc = PrototypeAccumulator::new(preds.num_classes);
    preds.records.iter().for_each(|r| acc.add(r));
    acc.finish()
}

/// Divergence of one record from its label-weighted blend of prototypes.
fn record_divergence(record: &PredictionRecord, protos: &ClassPrototypes, scratch: &mut Vec<f64>) -> Result<f64> {
    scratch.clear();
    scratch.resize(protos.num_classes(), 0.0);
    for (j, w) in record.labels.nonzero() {
        for (t, &q) in scratch.iter_mut().zip(protos.prototype(j)?.values()) {
            *t += w * q;
        }
    }
    let total = crate::summation::sum(scratch);
    if (total - 1.0).abs() > crate::prob::NORMALIZED_TOLERANCE {
        scratch.iter_mut().for_each(|t| *t /= total);
    }
    Ok(kl_unchecked(record.probs.values(), scratch))
}

/// Empirical CMI for one-hot labels.
pub fn cmi_emp(preds: &PredictionSet, protos: &ClassPrototypes) -> Result<f64> {
    let mut acc = ChunkedSum::new();
    for r in &preds.records {
        let y = r.labels.one_hot_class().ok_or(Error::MixedLabels { id: r.id })?;
        acc.add(kl_unchecked(r.probs.values(), protos.prototype(y)?.values()));
    }
    Ok(acc.value() / preds.len() as f64)
}

/// Generalized CMI; targets are label-weighted blends of class prototypes.
pub fn gcmi_emp(preds: &PredictionSet, protos: &ClassPrototypes) -> Result<f64> {
    let mut acc = ChunkedSum::new();
    let mut scratch = Vec::new();
    for r in &preds.records {
        acc.add(record_divergence(r, protos, &mut scratch)?);
    }
    Ok(acc.value() / preds.len() as f64)
}

/// What to do with classes that carry no label mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptyClassPolicy {
    /// Any empty class is an error.
    #[default]
    Strict,
    /// Empty classes are left out of DEV, which is averaged over the rest.
    Tolerant,
}

/// Centroid deviation in strict mode.
pub fn dev(protos: &ClassPrototypes) -> Result<f64> {
    dev_with_policy(protos, EmptyClassPolicy::Strict).map(|(v, _)| v)
}

/// Centroid deviation; the flag reports whether empty classes were skipped.
pub fn dev_with_policy(protos: &ClassPrototypes, policy: EmptyClassPolicy) -> Result<(f64, bool)> {
    if let (EmptyClassPolicy::Strict, Some(&class)) = (policy, protos.empty_classes.first()) {
        return Err(Error::EmptyClass { class });
    }
    let mut acc = NeumaierSum::new();
    let mut count = 0usize;
    for (y, q) in protos.normalized.iter().enumerate() {
        if let Some(q) = q {
            acc.add(-q.values()[y].max(EPSILON).ln());
            count += 1;
        }
    }
    Ok(((acc.value() / count as f64).max(0.0), !protos.empty_classes.is_empty()))
}

/// Partition of record ids by source image, for the replica variance baseline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicaGroups {
    group_of: HashMap<u64, usize>,
    sizes: Vec<usize>,
}

impl ReplicaGroups {
    pub fn from_groups(groups: Vec<Vec<u64>>) -> Result<Self> {
        let mut group_of = HashMap::new();
        let mut sizes = Vec::with_capacity(groups.len());
        for (g, members) in groups.into_iter().enumerate() {
            if members.is_empty() {
                return Err(Error::GroupCoverage(format!("group {g} is empty")));
            }
            sizes.push(members.len());
            for id in members {
                if group_of.insert(id, g).is_some() {
                    return Err(Error::GroupCoverage(format!("record {id} appears in more than one group")));
                }
            }
        }
        Ok(Self { group_of, sizes })
    }

    /// Groups records by a source key, e.g. the original image id.
    pub fn by_source(pairs: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        let mut order: Vec<u64> = Vec::new();
        let mut members: HashMap<u64, Vec<u64>> = HashMap::new();
        for (id, source) in pairs {
            members
                .entry(source)
                .or_insert_with(|| {
                    order.push(source);
                    Vec::new()
                })
                .push(id);
        }
        Self::from_groups(order.into_iter().map(|s| members.remove(&s).unwrap_or_default()).collect())
    }

    pub fn num_groups(&self) -> usize {
        self.sizes.len()
    }

    fn group(&self, id: u64) -> Result<usize> {
        self.group_of.get(&id).copied().ok_or_else(|| Error::GroupCoverage(format!("record {id} is in no group")))
    }
}

/// Which variance baseline was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    /// Mean over source images of the variance across their replicas.
    Replica,
    /// Variance across all records.
    Dataset,
}

/// Whether the divergence term is CMI (all one-hot) or GCMI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    OneHot,
    Mixed,
}

/// Scores of one candidate augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub da_name: String,
    pub n: usize,
    pub num_classes: usize,
    pub cmi: f64,
    pub dev: f64,
    pub m: f64,
    pub variance_baseline: f64,
    pub variance_mode: VarianceMode,
    pub mode: LabelMode,
    pub empty_class_policy_applied: bool,
    pub seed: u64,
    pub replicas: u32,
}

/// Parameters of a metric run that do not come from the data.
#[derive(Debug, Clone, Default)]
pub struct MetricOptions {
    pub da_name: String,
    pub policy: EmptyClassPolicy,
    pub seed: u64,
    pub replicas: u32,
    pub groups: Option<ReplicaGroups>,
    /// Worker threads for the second pass; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl MetricOptions {
    pub fn named(da_name: impl Into<String>) -> Self {
        Self { da_name: da_name.into(), replicas: 1, ..Default::default() }
    }
}

/// First-pass state: prototype and group-mean accumulators.
struct FirstPass<'a> {
    protos: PrototypeAccumulator,
    groups: Option<&'a ReplicaGroups>,
    group_sums: Vec<NeumaierSum>,
    group_counts: Vec<usize>,
    ids: Vec<u64>,
    seen: HashSet<u64>,
    all_one_hot: bool,
    num_classes: usize,
}

impl<'a> FirstPass<'a> {
    fn new(num_classes: usize, groups: Option<&'a ReplicaGroups>) -> Self {
        let g = groups.map_or(1, ReplicaGroups::num_groups);
        Self {
            protos: PrototypeAccumulator::new(num_classes),
            groups,
            group_sums: vec![NeumaierSum::new(); g],
            group_counts: vec![0; g],
            ids: Vec::new(),
            seen: HashSet::new(),
            all_one_hot: true,
            num_classes,
        }
    }

    fn observe(&mut self, r: &PredictionRecord) -> Result<()> {
        if r.labels.len() != self.num_classes || r.probs.len() != self.num_classes {
            return Err(Error::LengthMismatch { expected: self.num_classes, found: r.probs.len() });
        }
        if !self.seen.insert(r.id) {
            return Err(Error::DuplicateId(r.id));
        }
        let g = match self.groups {
            Some(groups) => groups.group(r.id)?,
            None => 0,
        };
        self.group_sums[g].add(r.true_class_mass());
        self.group_counts[g] += 1;
        self.all_one_hot &= r.labels.is_one_hot();
        self.protos.add(r);
        self.ids.push(r.id);
        Ok(())
    }

    fn finish(self, policy: EmptyClassPolicy) -> Result<SecondPass<'a>> {
        if self.ids.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(groups) = self.groups {
            if let Some(g) = (0..groups.num_groups()).find(|&g| self.group_counts[g] != groups.sizes[g]) {
                return Err(Error::GroupCoverage(format!(
                    "group {g} expects {} records, data has {}",
                    groups.sizes[g], self.group_counts[g]
                )));
            }
        }
        let protos = self.protos.finish();
        let (dev, skipped) = dev_with_policy(&protos, policy)?;
        let group_means = self.group_sums.iter().zip(&self.group_counts).map(|(s, &c)| s.value() / c as f64).collect();
        Ok(SecondPass {
            protos,
            dev,
            policy_applied: skipped,
            groups: self.groups,
            group_means,
            group_sizes: self.group_counts,
            ids: self.ids,
            all_one_hot: self.all_one_hot,
        })
    }
}

/// Second-pass state: per-record divergence and variance terms.
struct SecondPass<'a> {
    protos: ClassPrototypes,
    dev: f64,
    policy_applied: bool,
    groups: Option<&'a ReplicaGroups>,
    group_means: Vec<f64>,
    group_sizes: Vec<usize>,
    ids: Vec<u64>,
    all_one_hot: bool,
}

impl SecondPass<'_> {
    fn terms(&self, r: &PredictionRecord, scratch: &mut Vec<f64>) -> Result<(f64, f64)> {
        let kl = record_divergence(r, &self.protos, scratch)?;
        let g = match self.groups {
            Some(groups) => groups.group(r.id)?,
            None => 0,
        };
        let d = r.true_class_mass() - self.group_means[g];
        Ok((kl, d * d / self.group_sizes[g] as f64))
    }

    fn report(&self, kl: &ChunkedSum, var: &ChunkedSum, opts: &MetricOptions) -> MetricReport {
        let n = self.ids.len();
        let cmi = kl.value() / n as f64;
        let variance_baseline = var.value() / self.group_sizes.len() as f64;
        MetricReport {
            da_name: opts.da_name.clone(),
            n,
            num_classes: self.protos.num_classes(),
            cmi,
            dev: self.dev,
            m: self.dev - cmi,
            variance_baseline,
            variance_mode: if self.groups.is_some() { VarianceMode::Replica } else { VarianceMode::Dataset },
            mode: if self.all_one_hot { LabelMode::OneHot } else { LabelMode::Mixed },
            empty_class_policy_applied: self.policy_applied,
            seed: opts.seed,
            replicas: opts.replicas,
        }
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Computes CMI (or GCMI), DEV, `M = DEV - CMI` and the variance baseline.
pub fn metric_m(preds: &PredictionSet, opts: &MetricOptions) -> Result<MetricReport> {
    let mut first = FirstPass::new(preds.num_classes, opts.groups.as_ref());
    for r in &preds.records {
        first.observe(r)?;
    }
    let second = first.finish(opts.policy)?;

    let chunk_totals: Vec<Result<(f64, f64)>> = with_threads(opts.threads, || {
        preds
            .records
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut scratch = Vec::new();
                let mut kl = NeumaierSum::new();
                let mut var = NeumaierSum::new();
                for r in chunk {
                    let (k, v) = second.terms(r, &mut scratch)?;
                    kl.add(k);
                    var.add(v);
                }
                Ok((kl.value(), var.value()))
            })
            .collect()
    })?;

    let mut kl = ChunkedSum::new();
    let mut var = ChunkedSum::new();
    for t in chunk_totals {
        let (k, v) = t?;
        kl.add_chunk(k);
        var.add_chunk(v);
    }
    Ok(second.report(&kl, &var, opts))
}

/// Variance of the teacher's probability on the ground truth; per source
/// image across its replicas when `groups` is given, else across the dataset.
pub fn variance_baseline(preds: &PredictionSet, groups: Option<&ReplicaGroups>) -> Result<f64> {
    let g = groups.map_or(1, ReplicaGroups::num_groups);
    let mut sums = vec![NeumaierSum::new(); g];
    let mut counts = vec![0usize; g];
    let mut group_ids = Vec::with_capacity(preds.len());
    for r in &preds.records {
        let gi = match groups {
            Some(groups) => groups.group(r.id)?,
            None => 0,
        };
        sums[gi].add(r.true_class_mass());
        counts[gi] += 1;
        group_ids.push(gi);
    }
    if let Some(groups) = groups {
        if counts != groups.sizes {
            return Err(Error::GroupCoverage("groups reference records missing from the set".into()));
        }
    }
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s.value() / c as f64).collect();
    let mut acc = ChunkedSum::new();
    for (r, &gi) in preds.records.iter().zip(&group_ids) {
        let d = r.true_class_mass() - means[gi];
        acc.add(d * d / counts[gi] as f64);
    }
    Ok(acc.value() / g as f64)
}

/// A dataset of predictions that can be iterated more than once, yielding
/// the same records in the same order each time.
pub trait RecordSource {
    fn replay(&mut self) -> Result<Box<dyn Iterator<Item = Result<PredictionRecord>> + '_>>;
}

impl RecordSource for PredictionSet {
    fn replay(&mut self) -> Result<Box<dyn Iterator<Item = Result<PredictionRecord>> + '_>> {
        Ok(Box::new(self.records.iter().cloned().map(Ok)))
    }
}

/// Adapts a closure that reopens a record iterator.
pub struct ReplayFn<F>(pub F);

impl<F, I> RecordSource for ReplayFn<F>
where
    F: FnMut() -> Result<I>,
    I: Iterator<Item = Result<PredictionRecord>> + 'static,
{
    fn replay(&mut self) -> Result<Box<dyn Iterator<Item = Result<PredictionRecord>> + '_>> {
        Ok(Box::new((self.0)()?))
    }
}

/// Streaming two-pass form of [`metric_m`]: the first pass builds the
/// prototypes, the second accumulates the divergence and variance terms.
pub fn two_pass_stream(
    source: &mut dyn RecordSource,
    num_classes: usize,
    opts: &MetricOptions,
) -> Result<MetricReport> {
    let mut first = FirstPass::new(num_classes, opts.groups.as_ref());
    for r in source.replay()? {
        first.observe(&r?)?;
    }
    let second = first.finish(opts.policy)?;

    let mut kl = ChunkedSum::new();
    let mut var = ChunkedSum::new();
    let mut scratch = Vec::new();
    let mut count = 0usize;
    for r in source.replay()? {
        let r = r?;
        match second.ids.get(count) {
            Some(&id) if id == r.id => {}
            Some(&id) => {
                return Err(Error::ReplayMismatch(format!(
                    "record {count} has id {} on the second pass, {id} on the first",
                    r.id
                )))
            }
            None => {
                return Err(Error::ReplayMismatch(format!("second pass yields more than {} records", second.ids.len())))
            }
        }
        let (k, v) = second.terms(&r, &mut scratch)?;
        kl.add(k);
        var.add(v);
        count += 1;
    }
    if count != second.ids.len() {
        return Err(Error::ReplayMismatch(format!(
            "second pass yields {count} records, first pass {}",
            second.ids.len()
        )));
    }
    Ok(second.report(&kl, &var, opts))
}

/// Sorted indices of a uniform sample without replacement of
/// `round(fraction * n)` out of `n` items.
pub fn subsample_indices(n: usize, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidFraction(fraction));
    }
    if fraction == 1.0 {
        return Ok((0..n).collect());
    }
    let k = (fraction * n as f64).round() as usize;
    if k == 0 {
        return Err(Error::EmptyResult);
    }
    let mut rng = rng::named_rng(seed, "subsample");
    let mut picked = index::sample(&mut rng, n, k).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Random subset of the records, in original order and with original ids.
pub fn subsample(preds: &PredictionSet, fraction: f64, seed: u64) -> Result<PredictionSet> {
    let picked = subsample_indices(preds.len(), fraction, seed)?;
    let records = picked.into_iter().map(|i| preds.records[i].clone()).collect();
    PredictionSet::new(preds.num_classes, records)
}

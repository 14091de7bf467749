//! Record sources for the score command.

use std::collections::HashSet;
use std::path::PathBuf;

use augrank_core::augment::{apply_subset, AugmentStream};
use augrank_core::io::dump::DumpReader;
use augrank_core::metric::{subsample_indices, RecordSource, ReplicaGroups};
use augrank_core::{AugmentationSpec, Error, ImageDataset, PredictionRecord, Result, SyntheticTeacher};

/// Augmented stream scored by the synthetic teacher, regenerated from the
/// seed on every pass.
pub struct SyntheticSource<'a> {
    pub spec: &'a AugmentationSpec,
    pub dataset: &'a ImageDataset,
    pub teacher: &'a SyntheticTeacher,
    pub samples: Vec<usize>,
    pub seed: u64,
    pub replicas: u32,
}

impl SyntheticSource<'_> {
    fn stream(&self) -> Result<AugmentStream<'_>> {
        apply_subset(self.spec, self.dataset, self.samples.clone(), self.seed, self.replicas)
    }

    /// Groups the draws of each source image.
    pub fn groups(&self) -> Result<ReplicaGroups> {
        let r = self.replicas as u64;
        ReplicaGroups::from_groups(self.samples.iter().map(|&s| (0..r).map(|k| s as u64 * r + k).collect()).collect())
    }
}

impl RecordSource for SyntheticSource<'_> {
    fn replay(&mut self) -> Result<Box<dyn Iterator<Item = Result<PredictionRecord>> + '_>> {
        let teacher = self.teacher;
        Ok(Box::new(self.stream()?.map(move |s| {
            let s = s?;
            let probs = teacher.predict(&s.image);
            PredictionRecord::new(s.id, s.labels, probs)
        })))
    }
}

/// Dump file restricted to a random subset of source images. A record's
/// source image is `id / replicas`.
pub struct FilteredDump {
    path: PathBuf,
    replicas: u64,
    keep: Option<HashSet<u64>>,
}

impl FilteredDump {
    /// Scans the ids once to pick the subset and the replica groups.
    pub fn open(
        path: PathBuf,
        replicas: u32,
        fraction: f64,
        seed: u64,
    ) -> Result<(Self, usize, Option<ReplicaGroups>)> {
        let reader = DumpReader::open(&path)?;
        let num_classes = reader.header().num_classes;
        let replicas = replicas as u64;
        let mut ids = Vec::new();
        for r in reader {
            ids.push(r?.id);
        }
        let mut sources: Vec<u64> = ids.iter().map(|id| id / replicas).collect();
        sources.sort_unstable();
        sources.dedup();
        let keep = if fraction < 1.0 {
            let picked = subsample_indices(sources.len(), fraction, seed)?;
            Some(picked.into_iter().map(|i| sources[i]).collect::<HashSet<u64>>())
        } else {
            None
        };
        let kept: Vec<u64> =
            ids.into_iter().filter(|id| keep.as_ref().map_or(true, |k| k.contains(&(id / replicas)))).collect();
        if kept.is_empty() {
            return Err(Error::EmptyResult);
        }
        let groups = if replicas > 1 {
            Some(ReplicaGroups::by_source(kept.iter().map(|&id| (id, id / replicas)))?)
        } else {
            None
        };
        Ok((Self { path, replicas, keep }, num_classes, groups))
    }
}

impl RecordSource for FilteredDump {
    fn replay(&mut self) -> Result<Box<dyn Iterator<Item = Result<PredictionRecord>> + '_>> {
        let reader = DumpReader::open(&self.path)?;
        let replicas = self.replicas;
        let keep = self.keep.as_ref();
        Ok(Box::new(reader.filter(move |r| match (r, keep) {
            (Ok(r), Some(k)) => k.contains(&(r.id / replicas)),
            _ => true,
        })))
    }
}

//! Inputs shared by the benchmarks under `benches/`.

use augrank_core::augment::apply;
use augrank_core::synth::make_synthetic_dataset_sized;
use augrank_core::{AugmentationSpec, PredictionRecord, PredictionSet, SyntheticTeacher};

/// Synthetic teacher predictions on `classes * per_class` tiny augmented
/// images. CutMix gives mixed labels.
pub fn prediction_set(classes: usize, per_class: usize, mixed: bool) -> PredictionSet {
    let dataset = make_synthetic_dataset_sized(classes, per_class, 24.0, 1, 4, 4).expect("valid parameters");
    let teacher = SyntheticTeacher::with_default_palette(classes, 10.0).expect("valid teacher");
    let spec = if mixed {
        AugmentationSpec {
            batch: Some(augrank_core::BatchOp::CutMix { alpha: 1.0 }),
            ..AugmentationSpec::identity("cutmix")
        }
    } else {
        AugmentationSpec::minimal()
    };
    let records = apply(&spec, &dataset, 1, 1)
        .expect("valid spec")
        .map(|s| {
            let s = s.expect("augmentation succeeds");
            let probs = teacher.predict(&s.image);
            PredictionRecord::new(s.id, s.labels, probs).expect("consistent lengths")
        })
        .collect();
    PredictionSet::new(classes, records).expect("unique ids")
}

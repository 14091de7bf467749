use augrank_core::synth::make_synthetic_dataset;
use augrank_core::SyntheticTeacher;

fn mean_true_class_prob(noise: f64, seed: u64) -> f64 {
    let dataset = make_synthetic_dataset(8, 40, noise, seed).unwrap();
    let teacher = SyntheticTeacher::with_default_palette(8, 10.0).unwrap();
    let total: f64 = (0..dataset.len()).map(|i| teacher.predict(dataset.image(i)).values()[dataset.label(i)]).sum();
    total / dataset.len() as f64
}

#[test]
fn more_noise_means_less_confidence() {
    let levels = [0.0, 20.0, 40.0, 80.0, 160.0];
    for seed in 0..5 {
        let probs: Vec<f64> = levels.iter().map(|&n| mean_true_class_prob(n, seed)).collect();
        for w in probs.windows(2) {
            assert!(w[1] < w[0], "seed {seed}: {probs:?}");
        }
    }
}

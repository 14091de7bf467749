mod common;

use std::io::Cursor;

use augrank_core::io::container::{decode, write_records, ContainerRecord};
use augrank_core::io::dump::{read_prediction_dump, write_prediction_dump};
use augrank_core::io::report::{read_report, to_json, write_report, ReportDocument};
use augrank_core::metric::{metric_m, MetricOptions};
use augrank_core::ranking::rank_das;
use augrank_core::Image;
use common::*;
use proptest::prelude::*;

fn bits(set: &augrank_core::PredictionSet) -> Vec<(u64, Vec<u64>, Vec<u64>)> {
    set.records()
        .iter()
        .map(|r| {
            (
                r.id,
                r.labels.weights().iter().map(|w| w.to_bits()).collect(),
                r.probs.values().iter().map(|p| p.to_bits()).collect(),
            )
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dump_round_trip(c in 2usize..12, n in 1usize..60, seed in any::<u64>()) {
        let set = random_mixed_set(&mut rng(seed), c, n.max(c));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.txt");
        write_prediction_dump(&path, &set).unwrap();
        let back = read_prediction_dump(&path).unwrap();
        prop_assert_eq!(bits(&back), bits(&set));
    }

    #[test]
    fn container_round_trip(w in 1usize..9, h in 1usize..9, n in 0usize..20, seed in any::<u64>()) {
        let mut r = rng(seed);
        let set = if n > 0 { Some(random_mixed_set(&mut r, 5, n.max(5))) } else { None };
        let records: Vec<ContainerRecord> = set
            .iter()
            .flat_map(|s| s.records())
            .enumerate()
            .map(|(i, rec)| {
                let pixels = (0..w * h * 3).map(|_| rand::Rng::random::<u8>(&mut r)).collect();
                ContainerRecord {
                    id: rec.id as u32,
                    replica: (i % 3) as u16,
                    labels: rec.labels.clone(),
                    image: Image::new(w, h, pixels).unwrap(),
                }
            })
            .collect();
        let mut buf = Cursor::new(Vec::new());
        write_records(&mut buf, 5, (w, h), records.clone().into_iter().map(Ok)).unwrap();
        let bytes = buf.into_inner();
        let (header, back) = decode(&bytes).unwrap();
        prop_assert_eq!(header.count as usize, records.len());
        prop_assert_eq!(&back, &records);

        let mut again = Cursor::new(Vec::new());
        write_records(&mut again, 5, (w, h), back.into_iter().map(Ok)).unwrap();
        prop_assert_eq!(again.into_inner(), bytes);
    }

    #[test]
    fn report_round_trip(c in 2usize..8, n in 1usize..80, seed in any::<u64>()) {
        let set = random_mixed_set(&mut rng(seed), c, n.max(c));
        let report = metric_m(&set, &MetricOptions { seed, ..MetricOptions::named("r") }).unwrap();
        let doc = ReportDocument::for_metric(report.clone());
        let back: ReportDocument = serde_json::from_str(&to_json(&doc).unwrap()).unwrap();
        prop_assert_eq!(back, doc);

        let mut second = report.clone();
        second.da_name = "s".into();
        second.m += 0.5;
        let ranking = ReportDocument::for_ranking(rank_das(vec![second, report]).unwrap(), seed);
        let back: ReportDocument = serde_json::from_str(&to_json(&ranking).unwrap()).unwrap();
        prop_assert_eq!(back, ranking);
    }
}

#[test]
fn report_file_round_trip() {
    let set = random_one_hot_set(&mut rng(1), 3, 30);
    let doc = ReportDocument::for_metric(metric_m(&set, &MetricOptions::named("file")).unwrap())
        .with_config(serde_json::json!({ "seed": 1, "noise": 0.5 }));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    write_report(&path, &doc).unwrap();
    assert_eq!(read_report(&path).unwrap(), doc);
}

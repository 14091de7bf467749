//! Ordering candidate augmentations by `M` and checking the order against
//! measured student accuracies.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricReport;
use crate::summation::NeumaierSum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingEntry {
    pub da_name: String,
    /// 1-based position, best first.
    pub rank: usize,
    pub report: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub entries: Vec<RankingEntry>,
    pub selected: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spearman_vs_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_source: Option<String>,
}

/// Sorts reports ascending by `m`, ties broken by name.
pub fn rank_das(reports: Vec<MetricReport>) -> Result<RankingReport> {
    let Some(first) = reports.first() else {
        return Err(Error::InvalidParameter("nothing to rank".into()));
    };
    let num_classes = first.num_classes;
    let mut names = HashSet::new();
    for r in &reports {
        if !names.insert(r.da_name.as_str()) {
            return Err(Error::DuplicateName(r.da_name.clone()));
        }
        if r.num_classes != num_classes {
            return Err(Error::ClassCountMismatch { expected: num_classes, found: r.num_classes });
        }
    }
    let mut reports = reports;
    reports.sort_by(|a, b| a.m.total_cmp(&b.m).then_with(|| a.da_name.cmp(&b.da_name)));
    let entries: Vec<RankingEntry> = reports
        .into_iter()
        .enumerate()
        .map(|(i, report)| RankingEntry { da_name: report.da_name.clone(), rank: i + 1, report })
        .collect();
    Ok(RankingReport {
        selected: entries[0].da_name.clone(),
        entries,
        spearman_vs_accuracy: None,
        accuracy_source: None,
    })
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let mean = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().copied().collect::<NeumaierSum>().value() / n;
    let my = ys.iter().copied().collect::<NeumaierSum>().value() / n;
    let mut sxy = NeumaierSum::new();
    let mut sxx = NeumaierSum::new();
    let mut syy = NeumaierSum::new();
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    (sxy.value() / (sxx.value() * syy.value()).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { expected: xs.len(), found: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateInput("fewer than two points"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite value"));
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::DegenerateInput("constant first vector"));
    }
    if ys.iter().all(|&y| y == ys[0]) {
        return Err(Error::DegenerateInput("constant second vector"));
    }
    Ok(pearson(&fractional_ranks(xs), &fractional_ranks(ys)))
}

/// Ranks the reports and correlates `m` with top-1 accuracy. A perfect
/// metric scores -1, since lower `m` should mean higher accuracy.
pub fn evaluate_ranking(
    reports: Vec<MetricReport>,
    accuracies: &BTreeMap<String, f64>,
    accuracy_source: Option<String>,
) -> Result<RankingReport> {
    let mut ranking = rank_das(reports)?;
    attach_accuracies(&mut ranking, accuracies, accuracy_source)?;
    Ok(ranking)
}

/// Fills the Spearman field of an existing ranking.
pub fn attach_accuracies(
    ranking: &mut RankingReport,
    accuracies: &BTreeMap<String, f64>,
    accuracy_source: Option<String>,
) -> Result<()> {
    let mut ms = Vec::with_capacity(ranking.entries.len());
    let mut accs = Vec::with_capacity(ranking.entries.len());
    for e in &ranking.entries {
        let acc = accuracies.get(&e.da_name).ok_or_else(|| Error::MissingAccuracy(e.da_name.clone()))?;
        ms.push(e.report.m);
        accs.push(*acc);
    }
    ranking.spearman_vs_accuracy = Some(spearman(&ms, &accs)?);
    ranking.accuracy_source = accuracy_source;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{LabelMode, VarianceMode};
    use proptest::prelude::*;

    pub(crate) fn report(name: &str, m: f64) -> MetricReport {
        MetricReport {
            da_name: name.into(),
            n: 10,
            num_classes: 3,
            cmi: 0.0,
            dev: m,
            m,
            variance_baseline: 0.0,
            variance_mode: VarianceMode::Dataset,
            mode: LabelMode::OneHot,
            empty_class_policy_applied: false,
            seed: 0,
            replicas: 1,
        }
    }

    #[test]
    fn rank_examples() {
        let r = rank_das(vec![report("only", 0.4)]).unwrap();
        assert_eq!(r.selected, "only");

        let r = rank_das(vec![report("a", 0.3), report("b", 0.1), report("c", 0.2)]).unwrap();
        let names: Vec<_> = r.entries.iter().map(|e| e.da_name.as_str()).collect();
        assert_eq!(names, ["b", "c", "a"]);
        assert_eq!(r.entries.iter().map(|e| e.rank).collect::<Vec<_>>(), [1, 2, 3]);

        let r = rank_das(vec![report("zeta", 0.2), report("alpha", 0.2)]).unwrap();
        assert_eq!(r.selected, "alpha");
    }

    #[test]
    fn rank_errors() {
        assert!(matches!(rank_das(vec![report("a", 0.1), report("a", 0.2)]), Err(Error::DuplicateName(_))));
        let mut other = report("b", 0.1);
        other.num_classes = 4;
        assert!(matches!(rank_das(vec![report("a", 0.1), other]), Err(Error::ClassCountMismatch { .. })));
        assert!(rank_das(vec![]).is_err());
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);

        // Permutation of 1..=7 with sum d^2 = 80, found by enumeration.
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let ys = [2.0, 6.0, 7.0, 5.0, 4.0, 3.0, 1.0];
        let d2: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - y) * (x - y)).sum();
        assert_eq!(d2, 80.0);
        let rho = spearman(&xs, &ys).unwrap();
        assert!((rho - (1.0 - 480.0 / 336.0)).abs() < 1e-12);
        assert!((rho - -0.429).abs() < 5e-4);
    }

    #[test]
    fn spearman_with_ties_uses_average_ranks() {
        assert_eq!(fractional_ranks(&[1.0, 1.0, 2.0]), vec![1.5, 1.5, 3.0]);
        assert_eq!(fractional_ranks(&[3.0, 1.0, 3.0, 3.0]), vec![3.0, 1.0, 3.0, 3.0]);
        let rho = spearman(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        // Pearson of [1.5, 1.5, 3] and [1, 2, 3]: centered [-0.5, -0.5, 1] and [-1, 0, 1].
        let oracle = 1.5 / (1.5f64 * 2.0).sqrt();
        assert!((rho - oracle).abs() < 1e-12);
    }

    #[test]
    fn spearman_errors() {
        assert!(matches!(spearman(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::DegenerateInput(_))));
        assert!(matches!(spearman(&[1.0, 2.0], &[5.0, 5.0]), Err(Error::DegenerateInput(_))));
        assert!(matches!(spearman(&[1.0], &[1.0]), Err(Error::DegenerateInput(_))));
        assert!(matches!(spearman(&[1.0, 2.0], &[1.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn evaluate_examples() {
        let reports = vec![report("a", 0.1), report("b", 0.2), report("c", 0.3)];
        let anti: BTreeMap<String, f64> =
            [("a", 92.0), ("b", 91.0), ("c", 90.0)].map(|(k, v)| (k.to_string(), v)).into();
        let r = evaluate_ranking(reports.clone(), &anti, Some("acc.csv".into())).unwrap();
        assert_eq!(r.spearman_vs_accuracy, Some(-1.0));
        assert_eq!(r.accuracy_source.as_deref(), Some("acc.csv"));

        let mono: BTreeMap<String, f64> =
            [("a", 90.0), ("b", 91.0), ("c", 92.0)].map(|(k, v)| (k.to_string(), v)).into();
        assert_eq!(evaluate_ranking(reports.clone(), &mono, None).unwrap().spearman_vs_accuracy, Some(1.0));

        let partial: BTreeMap<String, f64> = [("a".to_string(), 90.0)].into();
        assert!(matches!(evaluate_ranking(reports, &partial, None), Err(Error::MissingAccuracy(n)) if n == "b"));
    }

    fn paired() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..20).prop_flat_map(|n| {
            (prop::collection::vec(-5i32..5, n), prop::collection::vec(-5i32..5, n))
                .prop_map(|(a, b)| (a.into_iter().map(f64::from).collect(), b.into_iter().map(f64::from).collect()))
        })
    }

    proptest! {
        #[test]
        fn spearman_bounded_and_symmetric((xs, ys) in paired(), rot in 0usize..20) {
            if let Ok(rho) = spearman(&xs, &ys) {
                prop_assert!((-1.0..=1.0).contains(&rho));
                let k = rot % xs.len();
                let mut xr = xs.clone();
                let mut yr = ys.clone();
                xr.rotate_left(k);
                yr.rotate_left(k);
                prop_assert!((spearman(&xr, &yr).unwrap() - rho).abs() < 1e-12);
                prop_assert!((spearman(&ys, &xs).unwrap() - rho).abs() < 1e-12);
            }
        }

        #[test]
        fn rank_is_a_pure_sort(ms in prop::collection::vec(-3.0f64..3.0, 1..12)) {
            let reports: Vec<_> = ms.iter().enumerate().map(|(i, &m)| report(&format!("da{i:02}"), m)).collect();
            let ranked = rank_das(reports.clone()).unwrap();
            let mut names: Vec<_> = ranked.entries.iter().map(|e| e.da_name.clone()).collect();
            names.sort();
            let mut expected: Vec<_> = reports.iter().map(|r| r.da_name.clone()).collect();
            expected.sort();
            prop_assert_eq!(names, expected);
            prop_assert!(ranked.entries.windows(2).all(|w| w[0].report.m <= w[1].report.m));

            // A strictly increasing transform keeps the order.
            let moved: Vec<_> = reports.iter().map(|r| { let mut r = r.clone(); r.m = r.m.exp() * 3.0 + 1.0; r }).collect();
            let moved = rank_das(moved).unwrap();
            let a: Vec<_> = ranked.entries.iter().map(|e| &e.da_name).collect();
            let b: Vec<_> = moved.entries.iter().map(|e| &e.da_name).collect();
            prop_assert_eq!(a, b);
        }
    }
}

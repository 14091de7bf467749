use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use augrank_core::augment::apply;
use augrank_core::io::container::write_augmented_dataset;
use augrank_core::io::report::{read_report, write_report, ReportDocument};
use augrank_core::metric::{subsample_indices, two_pass_stream, MetricOptions};
use augrank_core::ranking::{attach_accuracies, rank_das};
use augrank_core::synth::make_synthetic_dataset;
use augrank_core::{AugmentationSpec, Error, ImageDataset, MetricReport, RankingReport, SyntheticTeacher};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, Context};
use crate::source::{FilteredDump, SyntheticSource};

pub const RANKING_FILE: &str = "ranking.json";
pub const SCATTER_FILE: &str = "scatter.csv";

pub fn metric_file(out: &Path, spec: &str) -> PathBuf {
    out.join(format!("{spec}.metric.json"))
}

pub fn container_file(out: &Path, spec: &str) -> PathBuf {
    out.join(format!("{spec}.augr"))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))
}

/// Writes the augmented stream of one spec to the binary container.
pub fn augment(config: &RunConfig, spec_name: &str) -> Result<PathBuf, CliError> {
    let spec = config.spec(spec_name)?;
    let dataset = config.load_dataset()?;
    let dims = dataset.dims().ok_or(Error::EmptySet)?;
    create_dir(&config.out)?;
    let path = container_file(&config.out, &spec.name);
    let stream = apply(&spec, &dataset, config.seed, config.replicas)?;
    let n = stream.total();
    write_augmented_dataset(&path, config.num_classes(), dims, stream)
        .context(|| format!("writing {}", path.display()))?;
    println!("augmented {n} images ({}x{}) with '{}' -> {}", dims.0, dims.1, spec.name, path.display());
    Ok(path)
}

/// Inputs shared by the scoring of several specs.
struct Scorer {
    dataset: Option<ImageDataset>,
    teacher: Option<SyntheticTeacher>,
}

impl Scorer {
    fn new(config: &RunConfig) -> Result<Self, CliError> {
        let teacher = config.synthetic_teacher()?;
        let dataset = if teacher.is_some() { Some(config.load_dataset()?) } else { None };
        Ok(Self { dataset, teacher })
    }

    fn score(&self, config: &RunConfig, spec: &AugmentationSpec) -> Result<MetricReport, CliError> {
        let mut opts = MetricOptions {
            da_name: spec.name.clone(),
            policy: config.policy(),
            seed: config.seed,
            replicas: config.replicas,
            groups: None,
            threads: None,
        };
        let c = config.num_classes();
        match (config.dump_for(&spec.name)?, &self.dataset, &self.teacher) {
            (Some(path), _, _) => {
                let what = || format!("prediction dump for '{}' ({})", spec.name, path.display());
                let (mut source, dump_classes, groups) =
                    FilteredDump::open(path.to_path_buf(), config.replicas, config.subsample, config.seed)
                        .context(what)?;
                if dump_classes != c {
                    return Err(Error::ClassCountMismatch { expected: c, found: dump_classes }).context(what);
                }
                opts.groups = groups;
                two_pass_stream(&mut source, c, &opts).context(what)
            }
            (None, Some(dataset), Some(teacher)) => {
                let samples = subsample_indices(dataset.len(), config.subsample, config.seed)?;
                let mut source =
                    SyntheticSource { spec, dataset, teacher, samples, seed: config.seed, replicas: config.replicas };
                if config.replicas > 1 {
                    opts.groups = Some(source.groups()?);
                }
                two_pass_stream(&mut source, c, &opts).context(|| format!("scoring '{}'", spec.name))
            }
            _ => Err(CliError::Internal("no teacher for scoring".into())),
        }
    }
}

/// Scores one spec and writes its report.
pub fn score(config: &RunConfig, spec_name: &str) -> Result<PathBuf, CliError> {
    let spec = config.spec(spec_name)?;
    config.dump_for(&spec.name)?;
    let report = Scorer::new(config)?.score(config, &spec)?;
    create_dir(&config.out)?;
    let path = metric_file(&config.out, &spec.name);
    println!("{}", format_table(std::slice::from_ref(&report)));
    write_report(&path, &ReportDocument::for_metric(report).with_config(config.to_json()))
        .context(|| format!("writing {}", path.display()))?;
    println!("report -> {}", path.display());
    Ok(path)
}

/// Scores every spec, ranks them and writes the ranking.
pub fn rank(config: &RunConfig) -> Result<RankingReport, CliError> {
    let specs = config.specs();
    for spec in &specs {
        config.dump_for(&spec.name)?;
    }
    let scorer = Scorer::new(config)?;
    let reports = specs.iter().map(|s| scorer.score(config, s)).collect::<Result<Vec<_>, _>>()?;
    let ranking = rank_das(reports)?;
    create_dir(&config.out)?;
    let path = config.out.join(RANKING_FILE);
    write_report(&path, &ReportDocument::for_ranking(ranking.clone(), config.seed).with_config(config.to_json()))
        .context(|| format!("writing {}", path.display()))?;
    print_ranking(&ranking);
    println!("ranking -> {}", path.display());
    Ok(ranking)
}

/// Reads `da_name,accuracy` rows. A first row whose accuracy is not a
/// number is taken as a header.
pub fn read_accuracies(path: &Path) -> Result<BTreeMap<String, f64>, CliError> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path).map_err(|e| {
            match e.kind() {
                csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
                    CliError::Missing(format!("accuracy file {}", path.display()))
                }
                _ => CliError::Format(format!("{}: {e}", path.display())),
            }
        })?;
    let mut out = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
        if row.len() != 2 {
            return Err(CliError::Format(format!(
                "{} row {}: expected 2 fields, found {}",
                path.display(),
                i + 1,
                row.len()
            )));
        }
        let acc = match row[1].parse::<f64>() {
            Ok(a) if a.is_finite() => a,
            _ if i == 0 => continue,
            _ => {
                return Err(CliError::Format(format!(
                    "{} row {}: accuracy '{}' is not a number",
                    path.display(),
                    i + 1,
                    &row[1]
                )))
            }
        };
        if out.insert(row[0].to_string(), acc).is_some() {
            return Err(Error::DuplicateName(row[0].to_string()).into());
        }
    }
    Ok(out)
}

/// Adds the Spearman correlation against measured accuracies to a ranking.
pub fn spearman(report_path: &Path, accuracies_path: &Path, output: Option<&Path>) -> Result<f64, CliError> {
    if !report_path.is_file() {
        return Err(CliError::Missing(format!("ranking report {}", report_path.display())));
    }
    let mut doc = read_report(report_path).context(|| format!("reading {}", report_path.display()))?;
    let accuracies = read_accuracies(accuracies_path)?;
    let ranking =
        doc.ranking.as_mut().ok_or_else(|| CliError::Format(format!("{} holds no ranking", report_path.display())))?;
    attach_accuracies(ranking, &accuracies, Some(accuracies_path.display().to_string()))?;
    let rho = ranking.spearman_vs_accuracy.expect("just attached");
    let count = ranking.entries.len();
    let target = output.unwrap_or(report_path);
    write_report(target, &doc).context(|| format!("writing {}", target.display()))?;
    println!("spearman(m, accuracy) = {rho:.6} over {count} augmentations");
    println!("report -> {}", target.display());
    Ok(rho)
}

/// Parameters of the synthetic demonstration.
#[derive(Debug, Clone)]
pub struct DemoParams {
    pub num_classes: usize,
    pub per_class: usize,
    pub noise_levels: Vec<f64>,
    pub sharpness: f64,
    pub seed: u64,
    pub replicas: u32,
    pub out: PathBuf,
}

/// Scores the demo family on synthetic data at each noise level.
pub fn synth_demo(params: &DemoParams) -> Result<Vec<RankingReport>, CliError> {
    if params.noise_levels.is_empty() {
        return Err(CliError::Config("no noise levels".into()));
    }
    if params.replicas == 0 {
        return Err(CliError::Config("replicas must be at least 1".into()));
    }
    let teacher = SyntheticTeacher::with_default_palette(params.num_classes, params.sharpness)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let specs = AugmentationSpec::demo_family();
    create_dir(&params.out)?;
    let mut scatter = String::from("noise,da_name,rank,cmi,dev,m,variance_baseline\n");
    let mut rankings = Vec::new();
    for &noise in &params.noise_levels {
        let dataset = make_synthetic_dataset(params.num_classes, params.per_class, noise, params.seed)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let samples: Vec<usize> = (0..dataset.len()).collect();
        let mut reports = Vec::with_capacity(specs.len());
        for spec in &specs {
            let mut source = SyntheticSource {
                spec,
                dataset: &dataset,
                teacher: &teacher,
                samples: samples.clone(),
                seed: params.seed,
                replicas: params.replicas,
            };
            let opts = MetricOptions {
                da_name: spec.name.clone(),
                seed: params.seed,
                replicas: params.replicas,
                groups: if params.replicas > 1 { Some(source.groups()?) } else { None },
                ..Default::default()
            };
            reports.push(two_pass_stream(&mut source, params.num_classes, &opts)?);
        }
        let ranking = rank_das(reports)?;

        let dir = params.out.join(format!("noise-{noise}"));
        create_dir(&dir)?;
        let config = json!({
            "command": "synth-demo",
            "num_classes": params.num_classes,
            "per_class": params.per_class,
            "noise": noise,
            "sharpness": params.sharpness,
            "seed": params.seed,
            "replicas": params.replicas,
            "augmentation": specs,
        });
        for e in &ranking.entries {
            let path = metric_file(&dir, &e.da_name);
            write_report(&path, &ReportDocument::for_metric(e.report.clone()).with_config(config.clone()))?;
            let r = &e.report;
            writeln!(scatter, "{noise},{},{},{},{},{},{}", e.da_name, e.rank, r.cmi, r.dev, r.m, r.variance_baseline)
                .expect("writing to a String");
        }
        write_report(
            dir.join(RANKING_FILE),
            &ReportDocument::for_ranking(ranking.clone(), params.seed).with_config(config),
        )?;
        println!("noise {noise}:");
        print_ranking(&ranking);
        rankings.push(ranking);
    }
    let scatter_path = params.out.join(SCATTER_FILE);
    fs::write(&scatter_path, scatter).map_err(Error::from)?;
    println!("reports -> {}", params.out.display());
    Ok(rankings)
}

fn format_table(reports: &[MetricReport]) -> String {
    let width = reports.iter().map(|r| r.da_name.len()).max().unwrap_or(0).max(4);
    let mut s = format!("{:<width$}  {:>12}  {:>12}  {:>12}  {:>12}", "name", "cmi", "dev", "m", "variance");
    for r in reports {
        write!(
            s,
            "\n{:<width$}  {:>12.6}  {:>12.6}  {:>12.6}  {:>12.6}",
            r.da_name, r.cmi, r.dev, r.m, r.variance_baseline
        )
        .expect("writing to a String");
    }
    s
}

fn print_ranking(ranking: &RankingReport) {
    let reports: Vec<MetricReport> = ranking.entries.iter().map(|e| e.report.clone()).collect();
    println!("{}", format_table(&reports));
    println!("selected: {}", ranking.selected);
}

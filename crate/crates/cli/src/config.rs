//! Run configuration.
//!
//! A run is described by one TOML document:
//!
//! ```toml
//! seed = 7
//! replicas = 2
//! subsample = 1.0
//! strict_empty_class = true
//! out = "runs/demo"
//!
//! [dataset]
//! format = "synthetic"          # or "cifar" with `paths = [...]`
//! num_classes = 4
//! per_class = 250
//! noise = 8.0
//!
//! [teacher]
//! kind = "synthetic"            # or "dumps" with a `[teacher.dumps]` table
//! sharpness = 10.0
//!
//! [[augmentation]]
//! name = "flip"
//! ops = [{ kind = "random_flip", p = 0.5 }]
//! ```
//!
//! Relative paths are resolved against the directory of the config file.
//! With no `[[augmentation]]` entries the shipped specs are used.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use augrank_core::io::cifar::load_cifar_binary;
use augrank_core::synth::make_synthetic_dataset;
use augrank_core::{AugmentationSpec, EmptyClassPolicy, ImageDataset, SyntheticTeacher};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

fn default_replicas() -> u32 {
    1
}

fn default_subsample() -> f64 {
    1.0
}

fn default_strict() -> bool {
    true
}

fn default_out() -> PathBuf {
    PathBuf::from("augrank-out")
}

fn default_cifar_classes() -> usize {
    10
}

fn default_sharpness() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicas")]
    pub replicas: u32,
    #[serde(default = "default_subsample")]
    pub subsample: f64,
    #[serde(default = "default_strict")]
    pub strict_empty_class: bool,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub teacher: TeacherConfig,
    #[serde(default, rename = "augmentation")]
    pub augmentations: Vec<AugmentationSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    Cifar {
        paths: Vec<PathBuf>,
        #[serde(default = "default_cifar_classes")]
        num_classes: usize,
    },
    Synthetic {
        num_classes: usize,
        per_class: usize,
        #[serde(default)]
        noise: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TeacherConfig {
    Synthetic {
        #[serde(default = "default_sharpness")]
        sharpness: f64,
    },
    /// Prediction dump per spec name.
    Dumps { dumps: BTreeMap<String, PathBuf> },
}

impl Default for TeacherConfig {
    fn default() -> Self {
        TeacherConfig::Synthetic { sharpness: default_sharpness() }
    }
}

/// Command-line values that replace config keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub subsample: Option<f64>,
    pub replicas: Option<u32>,
    pub strict_empty_class: Option<bool>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Missing(format!("config {}: {e}", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.out);
        if let DatasetConfig::Cifar { paths, .. } = &mut self.dataset {
            paths.iter_mut().for_each(join);
        }
        if let TeacherConfig::Dumps { dumps } = &mut self.teacher {
            dumps.values_mut().for_each(join);
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(f) = o.subsample {
            self.subsample = f;
        }
        if let Some(r) = o.replicas {
            self.replicas = r;
        }
        if let Some(s) = o.strict_empty_class {
            self.strict_empty_class = s;
        }
    }

    /// Checks the values, then that every referenced file exists.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.replicas == 0 {
            return Err(CliError::Config("replicas must be at least 1".into()));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(CliError::Config(format!("subsample {} outside (0, 1]", self.subsample)));
        }
        let specs = self.specs();
        let mut names = HashSet::new();
        for spec in &specs {
            if !spec.name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
                || spec.name.starts_with('.')
            {
                return Err(CliError::Config(format!(
                    "augmentation name '{}' may only use letters, digits, '_', '-' and '.'",
                    spec.name
                )));
            }
            if !names.insert(spec.name.as_str()) {
                return Err(CliError::Config(format!("augmentation '{}' is defined twice", spec.name)));
            }
            spec.validate().map_err(|e| CliError::Config(format!("augmentation '{}': {e}", spec.name)))?;
        }
        match &self.dataset {
            DatasetConfig::Cifar { paths, num_classes } => {
                if paths.is_empty() {
                    return Err(CliError::Config("cifar dataset lists no files".into()));
                }
                if *num_classes < 2 || *num_classes > 256 {
                    return Err(CliError::Config(format!("cifar num_classes {num_classes} outside [2, 256]")));
                }
                for p in paths {
                    if !p.is_file() {
                        return Err(CliError::Missing(format!("dataset file {}", p.display())));
                    }
                }
            }
            DatasetConfig::Synthetic { num_classes, per_class, noise } => {
                if *num_classes < 2 || *per_class < 1 || !(noise.is_finite() && *noise >= 0.0) {
                    return Err(CliError::Config(format!(
                        "synthetic dataset needs num_classes >= 2, per_class >= 1 and noise >= 0, got {num_classes}, {per_class}, {noise}"
                    )));
                }
            }
        }
        match &self.teacher {
            TeacherConfig::Synthetic { sharpness } => {
                if !(sharpness.is_finite() && *sharpness > 0.0) {
                    return Err(CliError::Config(format!("teacher sharpness {sharpness} must be positive")));
                }
            }
            TeacherConfig::Dumps { dumps } => {
                for (name, path) in dumps {
                    if !names.contains(name.as_str()) {
                        return Err(CliError::Config(format!("dump given for unknown augmentation '{name}'")));
                    }
                    if !path.is_file() {
                        return Err(CliError::Missing(format!(
                            "prediction dump for augmentation '{name}': {}",
                            path.display()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The augmentation specs of the run.
    pub fn specs(&self) -> Vec<AugmentationSpec> {
        if self.augmentations.is_empty() {
            AugmentationSpec::shipped()
        } else {
            self.augmentations.clone()
        }
    }

    pub fn spec(&self, name: &str) -> Result<AugmentationSpec, CliError> {
        self.specs()
            .into_iter()
            .find(|s| s.name == name)
            .ok_or_else(|| CliError::Config(format!("no augmentation named '{name}'")))
    }

    pub fn policy(&self) -> EmptyClassPolicy {
        if self.strict_empty_class {
            EmptyClassPolicy::Strict
        } else {
            EmptyClassPolicy::Tolerant
        }
    }

    pub fn num_classes(&self) -> usize {
        match self.dataset {
            DatasetConfig::Cifar { num_classes, .. } | DatasetConfig::Synthetic { num_classes, .. } => num_classes,
        }
    }

    pub fn load_dataset(&self) -> Result<ImageDataset, CliError> {
        Ok(match &self.dataset {
            DatasetConfig::Cifar { paths, num_classes } => load_cifar_binary(paths, *num_classes)?,
            DatasetConfig::Synthetic { num_classes, per_class, noise } => {
                make_synthetic_dataset(*num_classes, *per_class, *noise, self.seed)?
            }
        })
    }

    pub fn synthetic_teacher(&self) -> Result<Option<SyntheticTeacher>, CliError> {
        match &self.teacher {
            TeacherConfig::Synthetic { sharpness } => {
                Ok(Some(SyntheticTeacher::with_default_palette(self.num_classes(), *sharpness)?))
            }
            TeacherConfig::Dumps { .. } => Ok(None),
        }
    }

    /// Dump path for `spec`, if the teacher reads dumps.
    pub fn dump_for(&self, spec: &str) -> Result<Option<&Path>, CliError> {
        match &self.teacher {
            TeacherConfig::Synthetic { .. } => Ok(None),
            TeacherConfig::Dumps { dumps } => dumps
                .get(spec)
                .map(|p| Some(p.as_path()))
                .ok_or_else(|| CliError::Missing(format!("no prediction dump configured for augmentation '{spec}'"))),
        }
    }

    /// The resolved config as embedded in reports.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        v["augmentation"] = serde_json::to_value(self.specs()).expect("specs serialize");
        v
    }
}

//! Command-line front end of augrank.

pub mod commands;
pub mod config;
pub mod error;
pub mod source;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::DemoParams;
use crate::config::{Overrides, RunConfig};
pub use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "augrank", version, about = "Score and rank data augmentations from teacher predictions")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Fraction of source images to score, in (0, 1].
    #[arg(long, global = true)]
    pub subsample: Option<f64>,
    /// Augmented draws per source image.
    #[arg(long, global = true)]
    pub replicas: Option<u32>,
    /// Fail on classes without label mass (`=false` skips them in DEV).
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub strict_empty_class: Option<bool>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the augmented dataset of one spec to a binary container.
    Augment { spec: String },
    /// Score one spec.
    Score { spec: String },
    /// Score and rank every spec.
    Rank,
    /// Correlate a ranking with measured accuracies (CSV `da_name,accuracy`).
    Spearman {
        report: PathBuf,
        accuracies: PathBuf,
        /// Write here instead of rewriting the report.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rank the demo family on generated color-class images.
    SynthDemo {
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 250)]
        per_class: usize,
        /// Pixel noise standard deviations, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        noise: Vec<f64>,
        /// Teacher sharpness.
        #[arg(long, default_value_t = 10.0)]
        alpha: f64,
    },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            subsample: self.subsample,
            replicas: self.replicas,
            strict_empty_class: self.strict_empty_class,
        }
    }

    fn run_config(&self) -> Result<RunConfig, CliError> {
        let path = self.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
        let mut config = RunConfig::load(path)?;
        config.apply(&self.overrides());
        config.validate()?;
        Ok(config)
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Augment { spec } => commands::augment(&cli.run_config()?, spec).map(drop),
        Command::Score { spec } => commands::score(&cli.run_config()?, spec).map(drop),
        Command::Rank => commands::rank(&cli.run_config()?).map(drop),
        Command::Spearman { report, accuracies, output } => {
            commands::spearman(report, accuracies, output.as_deref()).map(drop)
        }
        Command::SynthDemo { classes, per_class, noise, alpha } => commands::synth_demo(&DemoParams {
            num_classes: *classes,
            per_class: *per_class,
            noise_levels: noise.clone(),
            sharpness: *alpha,
            seed: cli.seed.unwrap_or(0),
            replicas: cli.replicas.unwrap_or(1),
            out: cli.out.clone().unwrap_or_else(|| PathBuf::from("synth-demo")),
        })
        .map(drop),
    }
}

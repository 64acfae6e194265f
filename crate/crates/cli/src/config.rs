//! Experiment configuration, read from TOML.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use varmap_core::corpus::{DatasetFormat, LabelSet};
use varmap_core::{NormalizationConfig, Scorer, TrainConfig};

use crate::error::CliError;

pub const DEFAULT_SEEDS: [u64; 5] = [42, 151, 2021, 15, 98];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    pub format: DatasetFormat,
    /// Overrides the format's default label codes.
    #[serde(default)]
    pub labels: Option<LabelSet>,
    /// Turn row-level problems into load errors.
    #[serde(default)]
    pub strict: bool,
}

/// When to give common instances a random single label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignLabels {
    /// Only when some common instance has no training label.
    #[default]
    Auto,
    Always,
    Never,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogsConfig {
    /// Epoch log to ingest instead of training. `{seed}` is replaced by the
    /// seed, so each seed can have its own file.
    pub path: String,
}

impl LogsConfig {
    pub fn for_seed(&self, seed: u64) -> PathBuf {
        PathBuf::from(self.path.replace("{seed}", &seed.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub output: PathBuf,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_scorers")]
    pub scorers: Vec<Scorer>,
    #[serde(default = "default_true")]
    pub normalize: bool,
    #[serde(default)]
    pub normalization: NormalizationConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub assign_labels: AssignLabels,
    #[serde(default)]
    pub logs: Option<LogsConfig>,
    #[serde(default = "default_cutoffs")]
    pub cutoffs: Vec<usize>,
    /// Step of the precision/recall series (`step, 2·step, …, |D|`).
    #[serde(default = "default_series_step")]
    pub series_step: usize,
    /// Seed pipelines allowed to run at once. Not part of the outputs.
    #[serde(default = "default_parallel", skip_serializing)]
    pub parallel_seeds: usize,
}

fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.to_vec()
}

fn default_scorers() -> Vec<Scorer> {
    vec![Scorer::DmMeanPred, Scorer::DmStdPred, Scorer::Random]
}

fn default_true() -> bool {
    true
}

fn default_cutoffs() -> Vec<usize> {
    varmap_core::evaluation::TABLE_CUTOFFS.to_vec()
}

fn default_series_step() -> usize {
    10
}

fn default_parallel() -> usize {
    1
}

impl ExperimentConfig {
    /// Minimal config for a dataset, with every other field at its default.
    pub fn new(path: impl Into<PathBuf>, format: DatasetFormat, output: impl Into<PathBuf>) -> Self {
        Self {
            dataset: DatasetConfig {
                path: path.into(),
                format,
                labels: None,
                strict: false,
            },
            output: output.into(),
            seeds: default_seeds(),
            scorers: default_scorers(),
            normalize: true,
            normalization: NormalizationConfig::default(),
            train: TrainConfig::default(),
            assign_labels: AssignLabels::Auto,
            logs: None,
            cutoffs: default_cutoffs(),
            series_step: default_series_step(),
            parallel_seeds: 1,
        }
    }

    /// Reads a TOML file. Relative paths inside it are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: Self =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.dataset.path = base.join(&config.dataset.path);
        config.output = base.join(&config.output);
        if let Some(logs) = &mut config.logs {
            if Path::new(&logs.path).is_relative() {
                logs.path = base.join(&logs.path).to_string_lossy().into_owned();
            }
        }
        Ok(config)
    }

    pub fn labels(&self) -> LabelSet {
        self.dataset
            .labels
            .clone()
            .unwrap_or_else(|| self.dataset.format.default_labels())
    }

    /// Checks everything that can be checked without reading the dataset.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.scorers.is_empty() {
            return bad("at least one scorer is required".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.seeds.iter().collect::<HashSet<_>>().len() != self.seeds.len() {
            return bad("seeds must be distinct".into());
        }
        if self.scorers.iter().collect::<HashSet<_>>().len() != self.scorers.len() {
            return bad("scorers must be distinct".into());
        }
        if self.parallel_seeds == 0 {
            return bad("parallel_seeds must be at least 1".into());
        }
        if self.series_step == 0 {
            return bad("series_step must be at least 1".into());
        }
        if !self.dataset.path.is_file() {
            return bad(format!("dataset not found: {}", self.dataset.path.display()));
        }
        if same_path(&self.dataset.path, &self.output) || self.dataset.path.starts_with(&self.output) {
            return bad("output directory must not contain the dataset".into());
        }
        if let Some(logs) = &self.logs {
            for seed in &self.seeds {
                let p = logs.for_seed(*seed);
                if !p.is_file() {
                    return bad(format!("epoch log not found for seed {seed}: {}", p.display()));
                }
                if p.starts_with(&self.output) {
                    return bad("epoch logs must live outside the output directory".into());
                }
            }
        }
        self.normalization
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.train.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let labels = self.labels();
        let codes = [&labels.variety_a, &labels.variety_b, &labels.common];
        if codes.iter().collect::<HashSet<_>>().len() != 3 {
            return bad("label codes must be distinct".into());
        }
        Ok(())
    }
}

fn same_path(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}

//! Training experiment settings: defaults, then a key=value file, then flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::CliError;
use crate::encoding::{MarkStrategy, Task, DEFAULT_MAX_LEN};
use crate::manifest::{parse_key_values_strict, render_key_values};
use crate::tagger::{BackendSpec, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub strategy: Option<MarkStrategy>,
    pub backend: BackendSpec,
    pub train: PathBuf,
    pub dev: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub max_len: usize,
    pub train_config: TrainConfig,
}

/// Values that may come from either the config file or the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub values: BTreeMap<String, String>,
}

impl Overrides {
    pub fn set(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
        let values = parse_key_values_strict(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Ok(Self { values })
    }

    /// Layer `other` on top of `self`.
    pub fn merged(mut self, other: Overrides) -> Self {
        self.values.extend(other.values);
        self
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Usage(format!("invalid value {v:?} for {key}")))
}

const KEYS: [&str; 13] = [
    "task",
    "strategy",
    "backend",
    "train",
    "dev",
    "out",
    "seed",
    "max_len",
    "learning_rate",
    "patience_epochs",
    "max_epochs",
    "batch_size",
    "train_seed",
];

impl ExperimentConfig {
    pub fn resolve(o: &Overrides) -> Result<Self, CliError> {
        if let Some(k) = o.values.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::Usage(format!("unknown config key {k:?}")));
        }
        let get = |k: &str| o.values.get(k).map(String::as_str);
        let need = |k: &str| get(k).ok_or_else(|| CliError::Usage(format!("missing required setting --{}", k.replace('_', "-"))));
        let task: Task = parse("task", need("task")?)?;
        let strategy = get("strategy").map(|s| parse::<MarkStrategy>("strategy", s)).transpose()?;
        if task == Task::Scope && strategy.is_none() {
            return Err(CliError::Usage("the scope task requires --strategy".into()));
        }
        let backend: BackendSpec = get("backend")
            .unwrap_or("test-small")
            .parse()
            .map_err(|e| CliError::Usage(format!("{e}")))?;
        let seed = get("seed").map(|s| parse("seed", s)).transpose()?.unwrap_or(42);
        let mut tc = TrainConfig::for_task(task);
        tc.seed = seed;
        if let Some(v) = get("learning_rate") {
            tc.learning_rate = parse("learning_rate", v)?;
        }
        if let Some(v) = get("patience_epochs") {
            tc.patience_epochs = parse("patience_epochs", v)?;
        }
        if let Some(v) = get("max_epochs") {
            tc.max_epochs = parse("max_epochs", v)?;
        }
        if let Some(v) = get("batch_size") {
            tc.batch_size = parse("batch_size", v)?;
        }
        if let Some(v) = get("train_seed") {
            tc.seed = parse("train_seed", v)?;
        }
        tc.validate(task.n_classes()).map_err(|e| CliError::Usage(e.to_string()))?;
        let cfg = Self {
            task,
            strategy,
            backend,
            train: PathBuf::from(need("train")?),
            dev: PathBuf::from(need("dev")?),
            out: PathBuf::from(need("out")?),
            seed,
            max_len: get("max_len").map(|s| parse("max_len", s)).transpose()?.unwrap_or(DEFAULT_MAX_LEN),
            train_config: tc,
        };
        for p in [&cfg.train, &cfg.dev] {
            if !p.exists() {
                return Err(CliError::Usage(format!("{} does not exist", p.display())));
            }
        }
        if cfg.max_len == 0 {
            return Err(CliError::Usage("max_len must be positive".into()));
        }
        Ok(cfg)
    }

    /// The settings as a config file that reproduces this run.
    pub fn render(&self) -> String {
        let mut pairs = vec![
            ("task", self.task.to_string()),
            ("backend", self.backend.to_string()),
            ("train", self.train.display().to_string()),
            ("dev", self.dev.display().to_string()),
            ("out", self.out.display().to_string()),
            ("seed", self.seed.to_string()),
            ("max_len", self.max_len.to_string()),
            ("learning_rate", self.train_config.learning_rate.to_string()),
            ("patience_epochs", self.train_config.patience_epochs.to_string()),
            ("max_epochs", self.train_config.max_epochs.to_string()),
            ("batch_size", self.train_config.batch_size.to_string()),
            ("train_seed", self.train_config.seed.to_string()),
        ];
        if let Some(s) = self.strategy {
            pairs.insert(1, ("strategy", s.to_string()));
        }
        render_key_values(pairs)
    }
}

//! Checkpoint directory layout:
//!
//! ```text
//! manifest.txt          key=value: task, n_classes, max_len, seed, backend, ...
//! backend_config.json   encoder architecture
//! backend.safetensors   encoder weights
//! head.safetensors      classification head
//! tokenizer/            vocab.txt or hashing.txt
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{BackendConfig, BackendSpec, EncoderBackend, TaggerError, TaggerModel, TrainConfig};
use crate::encoding::{ClassWeights, MarkStrategy, Task};
use crate::manifest::{parse_key_values, render_key_values};
use crate::tokenizer::Tokenizer;

pub const MANIFEST: &str = "manifest.txt";

/// What a checkpoint records besides weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckpointMeta {
    pub strategy: Option<MarkStrategy>,
    pub train_corpus: Option<String>,
    pub train_config: Option<TrainConfig>,
    pub extra: BTreeMap<String, String>,
}

fn io_err(path: &Path, e: std::io::Error) -> TaggerError {
    TaggerError::Checkpoint(format!("{}: {e}", path.display()))
}

pub fn save_checkpoint(model: &TaggerModel, dir: &Path, meta: &CheckpointMeta) -> Result<(), TaggerError> {
    fs::create_dir_all(dir.join("tokenizer")).map_err(|e| io_err(dir, e))?;
    let mut pairs: Vec<(&str, String)> = vec![
        ("task", model.task.to_string()),
        ("n_classes", model.n_classes().to_string()),
        ("max_len", model.max_len.to_string()),
        ("seed", model.seed.to_string()),
        ("backend", model.backend.spec.to_string()),
        ("hidden_size", model.backend.hidden_size().to_string()),
        ("deterministic_inference", "true".to_string()),
    ];
    if let Some(s) = meta.strategy {
        pairs.push(("strategy", s.to_string()));
    }
    if let Some(c) = &meta.train_corpus {
        pairs.push(("train_corpus", c.clone()));
    }
    if let Some(c) = &meta.train_config {
        pairs.push(("learning_rate", c.learning_rate.to_string()));
        pairs.push(("patience_epochs", c.patience_epochs.to_string()));
        pairs.push(("max_epochs", c.max_epochs.to_string()));
        pairs.push(("batch_size", c.batch_size.to_string()));
        pairs.push(("train_seed", c.seed.to_string()));
        let w: Vec<String> = c.class_weights.0.iter().map(|x| x.to_string()).collect();
        pairs.push(("class_weights", w.join(",")));
    }
    for (k, v) in &meta.extra {
        pairs.push((k.as_str(), v.clone()));
    }
    let manifest = dir.join(MANIFEST);
    fs::write(&manifest, render_key_values(pairs)).map_err(|e| io_err(&manifest, e))?;

    let config_path = dir.join("backend_config.json");
    let json = serde_json::to_string_pretty(&model.backend.config)
        .map_err(|e| TaggerError::Checkpoint(e.to_string()))?;
    fs::write(&config_path, json).map_err(|e| io_err(&config_path, e))?;
    model.backend.tokenizer.save(&dir.join("tokenizer"))?;
    model.backend.params().save(&dir.join("backend.safetensors"))?;
    model.head_params().save(&dir.join("head.safetensors"))?;
    Ok(())
}

fn required<'a>(kv: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str, TaggerError> {
    kv.get(key)
        .map(String::as_str)
        .ok_or_else(|| TaggerError::Checkpoint(format!("manifest lacks {key}")))
}

fn parsed<T: std::str::FromStr>(kv: &BTreeMap<String, String>, key: &str) -> Result<T, TaggerError> {
    required(kv, key)?
        .parse()
        .map_err(|_| TaggerError::Checkpoint(format!("manifest value for {key} is invalid")))
}

pub fn load_checkpoint(dir: &Path) -> Result<(TaggerModel, CheckpointMeta), TaggerError> {
    let manifest = dir.join(MANIFEST);
    if !manifest.exists() {
        return Err(TaggerError::MissingCheckpoint(manifest.display().to_string()));
    }
    let text = fs::read_to_string(&manifest).map_err(|e| io_err(&manifest, e))?;
    let kv = parse_key_values(&text);
    let task: Task = required(&kv, "task")?
        .parse()
        .map_err(|_| TaggerError::Checkpoint("manifest task is invalid".into()))?;
    let n_classes: usize = parsed(&kv, "n_classes")?;
    if n_classes != task.n_classes() {
        return Err(TaggerError::Checkpoint(format!(
            "manifest says {n_classes} classes for the {task} task"
        )));
    }
    let max_len: usize = parsed(&kv, "max_len")?;
    let seed: u64 = parsed(&kv, "seed")?;
    let spec: BackendSpec = required(&kv, "backend")?.parse()?;

    let config_path = dir.join("backend_config.json");
    let json = fs::read_to_string(&config_path)
        .map_err(|_| TaggerError::MissingCheckpoint(config_path.display().to_string()))?;
    let config: BackendConfig =
        serde_json::from_str(&json).map_err(|e| TaggerError::Checkpoint(format!("{}: {e}", config_path.display())))?;
    let tokenizer = Tokenizer::load(&dir.join("tokenizer"))?;
    let backend = EncoderBackend::from_parts(spec, config, tokenizer, seed)?;
    backend.params().load(&dir.join("backend.safetensors"))?;
    let model = TaggerModel::new(backend, task, max_len, seed)?;
    model.head_params().load(&dir.join("head.safetensors"))?;

    let strategy = match kv.get("strategy") {
        Some(s) => Some(
            s.parse()
                .map_err(|_| TaggerError::Checkpoint(format!("manifest strategy {s:?} is invalid")))?,
        ),
        None => None,
    };
    let train_config = if kv.contains_key("learning_rate") {
        let weights = required(&kv, "class_weights")?
            .split(',')
            .map(|w| w.trim().parse::<f32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| TaggerError::Checkpoint("manifest class_weights are invalid".into()))?;
        Some(TrainConfig {
            learning_rate: parsed(&kv, "learning_rate")?,
            patience_epochs: parsed(&kv, "patience_epochs")?,
            max_epochs: parsed(&kv, "max_epochs")?,
            batch_size: parsed(&kv, "batch_size")?,
            seed: parsed(&kv, "train_seed")?,
            class_weights: ClassWeights(weights),
        })
    } else {
        None
    };
    const KNOWN: [&str; 14] = [
        "task",
        "n_classes",
        "max_len",
        "seed",
        "backend",
        "hidden_size",
        "deterministic_inference",
        "strategy",
        "train_corpus",
        "learning_rate",
        "patience_epochs",
        "max_epochs",
        "batch_size",
        "train_seed",
    ];
    let extra = kv
        .iter()
        .filter(|(k, _)| !KNOWN.contains(&k.as_str()) && k.as_str() != "class_weights")
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let meta = CheckpointMeta {
        strategy,
        train_corpus: kv.get("train_corpus").cloned(),
        train_config,
        extra,
    };
    Ok((model, meta))
}

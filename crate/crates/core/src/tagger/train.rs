//! Training loop with early stopping on dev token F1.

use candle_nn::{AdamW, Optimizer, ParamsAdamW};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{weighted_loss, Distribution, TaggerError, TaggerModel};
use crate::encoding::{class_weights, ClassWeights, Task, TokenizedExample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub patience_epochs: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub class_weights: ClassWeights,
}

impl TrainConfig {
    pub fn for_task(task: Task) -> Self {
        Self {
            learning_rate: 3e-5,
            patience_epochs: 6,
            max_epochs: 60,
            batch_size: 32,
            seed: 42,
            class_weights: class_weights(task),
        }
    }

    pub fn validate(&self, n_classes: usize) -> Result<(), TaggerError> {
        let bad = |m: &str| Err(TaggerError::Config(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.patience_epochs == 0 || self.max_epochs == 0 || self.batch_size == 0 {
            return bad("patience_epochs, max_epochs and batch_size must be positive");
        }
        if self.patience_epochs >= self.max_epochs {
            return bad("patience_epochs must be smaller than max_epochs");
        }
        if self.class_weights.0.len() != n_classes {
            return bad("class_weights length differs from the number of classes");
        }
        if self.class_weights.0.iter().any(|w| w.is_nan() || *w < 0.0) {
            return bad("class weights must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn best_f1(&self) -> f64 {
        self.epochs
            .iter()
            .find(|r| r.epoch == self.best_epoch)
            .map_or(0.0, |r| r.dev_f1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,dev_f1\n");
        for r in &self.epochs {
            out.push_str(&format!("{},{:.6},{:.6}\n", r.epoch, r.train_loss, r.dev_f1));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Patience counter over a per-epoch metric; only strict improvements reset it.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    epoch: usize,
    best: Option<f64>,
    best_epoch: usize,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            epoch: 0,
            best: None,
            best_epoch: 0,
            since_best: 0,
        }
    }

    pub fn observe(&mut self, metric: f64) -> StopDecision {
        self.epoch += 1;
        if self.best.is_none_or(|b| metric > b) {
            self.best = Some(metric);
            self.best_epoch = self.epoch;
            self.since_best = 0;
            return StopDecision::Improved;
        }
        self.since_best += 1;
        if self.since_best >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    /// 1-based epoch of the best metric so far (0 before any epoch).
    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl TokenCounts {
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

fn argmax_real(d: &[f32], pad: usize) -> usize {
    let mut best = 0;
    for (i, &p) in d.iter().enumerate() {
        if i != pad && (best == pad || p > d[best]) {
            best = i;
        }
    }
    best
}

/// Micro-averaged token F1 over the task's positive classes.
pub fn token_f1(task: Task, examples: &[TokenizedExample], dists: &[Vec<Distribution>]) -> TokenCounts {
    let pad = task.pad_label() as usize;
    let positive = |c: usize| task.positive_classes().contains(&(c as u8));
    let mut counts = TokenCounts::default();
    for (ex, ds) in examples.iter().zip(dists) {
        for (&label, d) in ex.token_labels.iter().zip(ds).take(ex.n_real_tokens) {
            let gold = label as usize;
            let pred = argmax_real(d, pad);
            match (positive(gold), positive(pred)) {
                (true, true) if gold == pred => counts.tp += 1,
                (true, true) => {
                    counts.fp += 1;
                    counts.fn_ += 1;
                }
                (true, false) => counts.fn_ += 1,
                (false, true) => counts.fp += 1,
                (false, false) => {}
            }
        }
    }
    counts
}

/// Fraction of unpadded tokens whose argmax matches the gold label.
pub fn accuracy(task: Task, examples: &[TokenizedExample], dists: &[Vec<Distribution>]) -> f64 {
    let pad = task.pad_label() as usize;
    let (mut right, mut total) = (0usize, 0usize);
    for (ex, ds) in examples.iter().zip(dists) {
        for (&label, d) in ex.token_labels.iter().zip(ds).take(ex.n_real_tokens) {
            total += 1;
            right += (argmax_real(d, pad) == label as usize) as usize;
        }
    }
    if total == 0 {
        0.0
    } else {
        right as f64 / total as f64
    }
}

/// Train in place. On return the model holds the best-dev-F1 weights.
pub fn train(
    model: &mut TaggerModel,
    train_examples: &[TokenizedExample],
    dev_examples: &[TokenizedExample],
    config: &TrainConfig,
) -> Result<TrainHistory, TaggerError> {
    let n_classes = model.n_classes();
    config.validate(n_classes)?;
    if train_examples.is_empty() {
        return Err(TaggerError::Data("training set is empty".into()));
    }
    if dev_examples.is_empty() {
        return Err(TaggerError::Data("dev set is empty".into()));
    }
    for ex in train_examples.iter().chain(dev_examples) {
        if let Some(&bad) = ex.token_labels.iter().find(|&&l| l as usize >= n_classes) {
            return Err(TaggerError::Data(format!(
                "{}: label {bad} out of range for {n_classes} classes",
                ex.source
            )));
        }
    }

    let mut opt = AdamW::new(
        model.vars(),
        ParamsAdamW {
            lr: config.learning_rate,
            weight_decay: 0.0,
            ..ParamsAdamW::default()
        },
    )?;
    let mut order_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut stopper = EarlyStopping::new(config.patience_epochs);
    let mut history = TrainHistory {
        epochs: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
    };
    let mut best = None;
    let mut order: Vec<usize> = (0..train_examples.len()).collect();

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut order_rng);
        let mut loss_sum = 0.0f64;
        let mut n_batches = 0usize;
        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            let refs: Vec<&TokenizedExample> = chunk.iter().map(|&i| &train_examples[i]).collect();
            let batch = model.batch(&refs)?;
            let logits = model.logits(&batch.ids, &batch.mask, Some(&mut dropout_rng))?;
            let loss = weighted_loss(&logits, &batch.labels, &batch.mask, &config.class_weights)?;
            let value = loss.to_scalar::<f32>()?;
            if !value.is_finite() {
                return Err(TaggerError::NonFinite {
                    epoch,
                    batch: batch_idx + 1,
                    loss: value,
                });
            }
            opt.backward_step(&loss)?;
            loss_sum += value as f64;
            n_batches += 1;
        }
        let dists = model.predict_distributions(dev_examples)?;
        let dev_f1 = token_f1(model.task, dev_examples, &dists).f1();
        let train_loss = loss_sum / n_batches.max(1) as f64;
        log::info!("epoch {epoch}: train loss {train_loss:.5}, dev F1 {dev_f1:.4}");
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            dev_f1,
        });
        match stopper.observe(dev_f1) {
            StopDecision::Improved => {
                best = Some((model.backend.params.snapshot()?, model.head_params.snapshot()?));
            }
            StopDecision::Continue => {}
            StopDecision::Stop => {
                history.stopped_early = true;
                break;
            }
        }
    }
    history.best_epoch = stopper.best_epoch();
    if let Some((backend, head)) = best {
        model.backend.params.restore(&backend)?;
        model.head_params.restore(&head)?;
    }
    Ok(history)
}

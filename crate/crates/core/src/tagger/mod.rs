//! Token classifier: a pluggable encoder followed by a linear softmax head.

mod bert;
mod checkpoint;
mod context;
mod params;
mod train;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use candle_core::{DType, Device, Tensor, Var, D};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{ClassWeights, Task, TokenizedExample};
use crate::tokenizer::{HashingTokenizer, Tokenizer, TokenizerError, WordPieceTokenizer};

pub use bert::{load_pretrained, map_pretrained_name, BertConfig, BertEncoder};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use context::{ContextConfig, ContextEncoder};
pub use params::ParamStore;
pub use train::{
    accuracy, token_f1, train, EarlyStopping, EpochRecord, StopDecision, TokenCounts, TrainConfig,
    TrainHistory,
};

/// Per-token probability vector.
pub type Distribution = Vec<f32>;

pub const TEST_SMALL_HIDDEN: usize = 32;
const TEST_SMALL_BUCKETS: u32 = 4096;
const TEST_SMALL_PIECE_CHARS: usize = 4;
const INFERENCE_BATCH: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum TaggerError {
    #[error("tensor error: {0}")]
    Tensor(#[from] candle_core::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing checkpoint files: {0}")]
    MissingCheckpoint(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}")]
    NonFinite { epoch: usize, batch: usize, loss: f32 },
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Parsed `--backend` value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    /// `test-small[:H]`
    TestSmall { hidden: usize },
    /// `pretrained-base-uncased[:DIR]`, DIR holding `vocab.txt`,
    /// `model.safetensors` and optionally `config.json`.
    PretrainedBaseUncased { dir: Option<PathBuf> },
}

impl BackendSpec {
    pub fn hidden_size(&self) -> Result<usize, TaggerError> {
        match self {
            BackendSpec::TestSmall { hidden } => Ok(*hidden),
            BackendSpec::PretrainedBaseUncased { dir } => {
                match dir.as_ref().map(|d| d.join("config.json")).filter(|p| p.exists()) {
                    Some(path) => Ok(BertConfig::from_file(&path)?.hidden_size),
                    None => Ok(BertConfig::base().hidden_size),
                }
            }
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::TestSmall { hidden } => write!(f, "test-small:{hidden}"),
            BackendSpec::PretrainedBaseUncased { dir: None } => f.write_str("pretrained-base-uncased"),
            BackendSpec::PretrainedBaseUncased { dir: Some(d) } => {
                write!(f, "pretrained-base-uncased:{}", d.display())
            }
        }
    }
}

impl FromStr for BackendSpec {
    type Err = TaggerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        match (name, arg) {
            ("test-small", None) => Ok(BackendSpec::TestSmall {
                hidden: TEST_SMALL_HIDDEN,
            }),
            ("test-small", Some(h)) => match h.parse() {
                Ok(hidden) if hidden > 0 => Ok(BackendSpec::TestSmall { hidden }),
                _ => Err(TaggerError::Config(format!("bad hidden size in backend spec {s:?}"))),
            },
            ("pretrained-base-uncased", dir) => Ok(BackendSpec::PretrainedBaseUncased {
                dir: dir.filter(|d| !d.is_empty()).map(PathBuf::from),
            }),
            _ => Err(TaggerError::Config(format!("unknown backend {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendConfig {
    Context(ContextConfig),
    Bert(BertConfig),
}

#[derive(Debug)]
enum Encoder {
    Context(ContextEncoder),
    Bert(BertEncoder),
}

/// Encoder producing one `hidden_size` vector per token.
#[derive(Debug)]
pub struct EncoderBackend {
    pub spec: BackendSpec,
    pub config: BackendConfig,
    pub tokenizer: Tokenizer,
    pub trainable: bool,
    params: ParamStore,
    encoder: Encoder,
}

impl EncoderBackend {
    /// Freshly initialized backend with the given architecture.
    pub fn from_parts(
        spec: BackendSpec,
        config: BackendConfig,
        tokenizer: Tokenizer,
        seed: u64,
    ) -> Result<Self, TaggerError> {
        let mut params = ParamStore::new(seed, Device::Cpu);
        let encoder = match &config {
            BackendConfig::Context(c) => Encoder::Context(ContextEncoder::new(c, &mut params)?),
            BackendConfig::Bert(c) => Encoder::Bert(BertEncoder::new(c, &mut params)?),
        };
        Ok(Self {
            spec,
            config,
            tokenizer,
            trainable: true,
            params,
            encoder,
        })
    }

    pub fn name(&self) -> String {
        self.spec.to_string()
    }

    pub fn hidden_size(&self) -> usize {
        match &self.config {
            BackendConfig::Context(c) => c.hidden_size,
            BackendConfig::Bert(c) => c.hidden_size,
        }
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    /// `ids` `[B, L]` u32 and `mask` `[B, L]` f32 to `[B, L, H]`. Dropout is
    /// applied only when `rng` is given.
    pub fn encode(&self, ids: &Tensor, mask: &Tensor, rng: Option<&mut ChaCha8Rng>) -> Result<Tensor, TaggerError> {
        match &self.encoder {
            Encoder::Context(e) => e.forward(ids, mask),
            Encoder::Bert(e) => e.forward(ids, mask, rng),
        }
    }
}

/// Build a backend from its spec string form.
pub fn make_backend(spec: &BackendSpec, seed: u64) -> Result<EncoderBackend, TaggerError> {
    match spec {
        BackendSpec::TestSmall { hidden } => {
            let tokenizer = Tokenizer::Hashing(HashingTokenizer::new(TEST_SMALL_BUCKETS, TEST_SMALL_PIECE_CHARS));
            let config = BackendConfig::Context(ContextConfig {
                vocab_size: tokenizer.vocab_size(),
                hidden_size: *hidden,
                layers: 2,
            });
            EncoderBackend::from_parts(spec.clone(), config, tokenizer, seed)
        }
        BackendSpec::PretrainedBaseUncased { dir } => {
            let dir = dir.as_ref().ok_or_else(|| {
                TaggerError::MissingCheckpoint(
                    "pretrained-base-uncased needs a checkpoint directory (pretrained-base-uncased:DIR)".into(),
                )
            })?;
            let vocab = dir.join("vocab.txt");
            let weights = dir.join("model.safetensors");
            for p in [&vocab, &weights] {
                if !p.exists() {
                    return Err(TaggerError::MissingCheckpoint(p.display().to_string()));
                }
            }
            let tokenizer = Tokenizer::WordPiece(WordPieceTokenizer::from_vocab_file(&vocab)?);
            let config_path = dir.join("config.json");
            let mut config = if config_path.exists() {
                BertConfig::from_file(&config_path)?
            } else {
                BertConfig::base()
            };
            config.vocab_size = config.vocab_size.max(tokenizer.vocab_size());
            let backend = EncoderBackend::from_parts(spec.clone(), BackendConfig::Bert(config), tokenizer, seed)?;
            load_pretrained(&backend.params, &weights)?;
            Ok(backend)
        }
    }
}

/// Encoder plus an `H x N_C` softmax head for one task.
#[derive(Debug)]
pub struct TaggerModel {
    pub task: Task,
    pub max_len: usize,
    pub seed: u64,
    pub backend: EncoderBackend,
    head_params: ParamStore,
    head_weight: Tensor,
    head_bias: Tensor,
}

/// Batched tensors for a slice of examples.
pub struct Batch {
    pub ids: Tensor,
    pub mask: Tensor,
    pub labels: Tensor,
}

impl TaggerModel {
    pub fn new(backend: EncoderBackend, task: Task, max_len: usize, seed: u64) -> Result<Self, TaggerError> {
        let h = backend.hidden_size();
        let n = task.n_classes();
        let mut head_params = ParamStore::new(seed ^ 0x4845_4144, Device::Cpu);
        let head_weight = head_params.normal("head.weight", &[n, h], 0.02)?;
        let head_bias = head_params.zeros("head.bias", &[n])?;
        Ok(Self {
            task,
            max_len,
            seed,
            backend,
            head_params,
            head_weight,
            head_bias,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.task.n_classes()
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.backend.tokenizer
    }

    pub fn head_params(&self) -> &ParamStore {
        &self.head_params
    }

    pub fn head_weight(&self) -> &Tensor {
        &self.head_weight
    }

    /// Trainable variables: the head always, the encoder if it is trainable.
    pub fn vars(&self) -> Vec<Var> {
        let mut vars = self.head_params.vars();
        if self.backend.trainable {
            vars.extend(self.backend.params.vars());
        }
        vars
    }

    pub fn batch(&self, examples: &[&TokenizedExample]) -> Result<Batch, TaggerError> {
        let b = examples.len();
        let l = self.max_len;
        let mut ids = Vec::with_capacity(b * l);
        let mut mask = Vec::with_capacity(b * l);
        let mut labels = Vec::with_capacity(b * l);
        for ex in examples {
            if ex.max_len() != l {
                return Err(TaggerError::Shape(format!(
                    "{}: sequence length {} but the model expects {l}",
                    ex.source,
                    ex.max_len()
                )));
            }
            ids.extend_from_slice(&ex.token_ids);
            mask.extend(ex.attention_mask.iter().map(|&m| m as f32));
            labels.extend(ex.token_labels.iter().map(|&x| x as u32));
        }
        let dev = self.head_params.device();
        Ok(Batch {
            ids: Tensor::from_vec(ids, (b, l), dev)?,
            mask: Tensor::from_vec(mask, (b, l), dev)?,
            labels: Tensor::from_vec(labels, (b, l), dev)?,
        })
    }

    /// Unnormalized scores `[B, L, N_C]`.
    pub fn logits(&self, ids: &Tensor, mask: &Tensor, rng: Option<&mut ChaCha8Rng>) -> Result<Tensor, TaggerError> {
        let hidden = self.backend.encode(ids, mask, rng)?;
        let (b, l, h) = hidden.dims3()?;
        Ok(hidden
            .reshape((b * l, h))?
            .matmul(&self.head_weight.t()?)?
            .broadcast_add(&self.head_bias)?
            .reshape((b, l, self.n_classes()))?)
    }

    /// One distribution per token position, padding included.
    pub fn predict_distributions(&self, examples: &[TokenizedExample]) -> Result<Vec<Vec<Distribution>>, TaggerError> {
        let mut out = Vec::with_capacity(examples.len());
        for chunk in examples.chunks(INFERENCE_BATCH) {
            let refs: Vec<&TokenizedExample> = chunk.iter().collect();
            let batch = self.batch(&refs)?;
            let logits = self.logits(&batch.ids, &batch.mask, None)?;
            let probs = candle_nn::ops::softmax(&logits, D::Minus1)?;
            out.extend(probs.to_vec3::<f32>()?);
        }
        Ok(out)
    }

    pub fn save(&self, dir: &Path, meta: &CheckpointMeta) -> Result<(), TaggerError> {
        save_checkpoint(self, dir, meta)
    }

    pub fn load(dir: &Path) -> Result<(Self, CheckpointMeta), TaggerError> {
        load_checkpoint(dir)
    }
}

/// Class-weighted cross-entropy normalized by the total weight. Positions
/// with mask 0 contribute nothing.
pub fn weighted_loss(
    logits: &Tensor,
    labels: &Tensor,
    mask: &Tensor,
    weights: &ClassWeights,
) -> Result<Tensor, TaggerError> {
    let (b, l, c) = logits.dims3()?;
    if weights.0.len() != c {
        return Err(TaggerError::Config(format!("{} class weights for {c} classes", weights.0.len())));
    }
    let logp = candle_nn::ops::log_softmax(logits, D::Minus1)?;
    let picked = logp.gather(&labels.unsqueeze(2)?, 2)?.squeeze(2)?;
    let w = Tensor::from_slice(&weights.0, c, logits.device())?
        .index_select(&labels.flatten_all()?, 0)?
        .reshape((b, l))?
        .mul(&mask.to_dtype(DType::F32)?)?;
    let total = w.sum_all()?.to_scalar::<f32>()?;
    let nll = (picked * w)?.sum_all()?.neg()?;
    Ok((nll / (total.max(f32::MIN_POSITIVE) as f64))?)
}

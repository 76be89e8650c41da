//! BERT encoder using the Hugging Face parameter layout, so published
//! `model.safetensors` checkpoints load directly.

use std::collections::HashMap;
use std::path::Path;

use candle_core::{DType, Tensor, D};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use super::TaggerError;

fn default_eps() -> f64 {
    1e-12
}

fn default_dropout() -> f32 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BertConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_hidden_layers: usize,
    pub num_attention_heads: usize,
    pub intermediate_size: usize,
    pub max_position_embeddings: usize,
    #[serde(default = "one")]
    pub type_vocab_size: usize,
    #[serde(default = "default_eps")]
    pub layer_norm_eps: f64,
    #[serde(default = "default_dropout")]
    pub hidden_dropout_prob: f32,
    #[serde(default = "default_dropout")]
    pub attention_probs_dropout_prob: f32,
}

fn one() -> usize {
    1
}

impl BertConfig {
    /// The uncased base model.
    pub fn base() -> Self {
        Self {
            vocab_size: 30522,
            hidden_size: 768,
            num_hidden_layers: 12,
            num_attention_heads: 12,
            intermediate_size: 3072,
            max_position_embeddings: 512,
            type_vocab_size: 2,
            layer_norm_eps: 1e-12,
            hidden_dropout_prob: 0.1,
            attention_probs_dropout_prob: 0.1,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, TaggerError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TaggerError::MissingCheckpoint(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| TaggerError::Config(format!("{}: {e}", path.display())))
    }
}

struct Linear {
    weight: Tensor,
    bias: Tensor,
}

impl Linear {
    fn new(params: &mut ParamStore, name: &str, input: usize, output: usize) -> Result<Self, TaggerError> {
        Ok(Self {
            weight: params.normal(&format!("{name}.weight"), &[output, input], 0.02)?,
            bias: params.zeros(&format!("{name}.bias"), &[output])?,
        })
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor, TaggerError> {
        let dims = x.dims().to_vec();
        let input = *dims.last().expect("rank >= 1");
        let rows = x.elem_count() / input;
        let y = x
            .reshape((rows, input))?
            .matmul(&self.weight.t()?)?
            .broadcast_add(&self.bias)?;
        let mut out_dims = dims;
        *out_dims.last_mut().expect("rank >= 1") = self.weight.dim(0)?;
        Ok(y.reshape(out_dims)?)
    }
}

struct LayerNorm {
    weight: Tensor,
    bias: Tensor,
    eps: f64,
}

impl LayerNorm {
    fn new(params: &mut ParamStore, name: &str, size: usize, eps: f64) -> Result<Self, TaggerError> {
        Ok(Self {
            weight: params.ones(&format!("{name}.weight"), &[size])?,
            bias: params.zeros(&format!("{name}.bias"), &[size])?,
            eps,
        })
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor, TaggerError> {
        Ok(candle_nn::ops::layer_norm_slow(x, &self.weight, &self.bias, self.eps as f32)?)
    }
}

struct Layer {
    query: Linear,
    key: Linear,
    value: Linear,
    attn_out: Linear,
    attn_norm: LayerNorm,
    intermediate: Linear,
    output: Linear,
    out_norm: LayerNorm,
}

pub struct BertEncoder {
    config: BertConfig,
    word: Tensor,
    position: Tensor,
    token_type: Tensor,
    emb_norm: LayerNorm,
    layers: Vec<Layer>,
}

impl std::fmt::Debug for BertEncoder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BertEncoder").field("config", &self.config).finish()
    }
}

fn dropout(x: &Tensor, p: f32, rng: Option<&mut ChaCha8Rng>) -> Result<Tensor, TaggerError> {
    let Some(rng) = rng else { return Ok(x.clone()) };
    if p <= 0.0 {
        return Ok(x.clone());
    }
    let keep = 1.0 / (1.0 - p);
    let mask: Vec<f32> = (0..x.elem_count())
        .map(|_| if rng.random::<f32>() < p { 0.0 } else { keep })
        .collect();
    let mask = Tensor::from_vec(mask, x.shape(), x.device())?;
    Ok((x * mask)?)
}

impl BertEncoder {
    pub fn new(config: &BertConfig, params: &mut ParamStore) -> Result<Self, TaggerError> {
        if !config.hidden_size.is_multiple_of(config.num_attention_heads) {
            return Err(TaggerError::Config(format!(
                "hidden_size {} is not divisible by {} heads",
                config.hidden_size, config.num_attention_heads
            )));
        }
        let h = config.hidden_size;
        let eps = config.layer_norm_eps;
        let word = params.normal("embeddings.word_embeddings.weight", &[config.vocab_size, h], 0.02)?;
        let position = params.normal(
            "embeddings.position_embeddings.weight",
            &[config.max_position_embeddings, h],
            0.02,
        )?;
        let token_type = params.normal(
            "embeddings.token_type_embeddings.weight",
            &[config.type_vocab_size.max(1), h],
            0.02,
        )?;
        let emb_norm = LayerNorm::new(params, "embeddings.LayerNorm", h, eps)?;
        let mut layers = Vec::with_capacity(config.num_hidden_layers);
        for i in 0..config.num_hidden_layers {
            let p = format!("encoder.layer.{i}");
            layers.push(Layer {
                query: Linear::new(params, &format!("{p}.attention.self.query"), h, h)?,
                key: Linear::new(params, &format!("{p}.attention.self.key"), h, h)?,
                value: Linear::new(params, &format!("{p}.attention.self.value"), h, h)?,
                attn_out: Linear::new(params, &format!("{p}.attention.output.dense"), h, h)?,
                attn_norm: LayerNorm::new(params, &format!("{p}.attention.output.LayerNorm"), h, eps)?,
                intermediate: Linear::new(params, &format!("{p}.intermediate.dense"), h, config.intermediate_size)?,
                output: Linear::new(params, &format!("{p}.output.dense"), config.intermediate_size, h)?,
                out_norm: LayerNorm::new(params, &format!("{p}.output.LayerNorm"), h, eps)?,
            });
        }
        Ok(Self {
            config: config.clone(),
            word,
            position,
            token_type,
            emb_norm,
            layers,
        })
    }

    pub fn config(&self) -> &BertConfig {
        &self.config
    }

    pub fn forward(
        &self,
        ids: &Tensor,
        mask: &Tensor,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Tensor, TaggerError> {
        let (b, l) = ids.dims2()?;
        let h = self.config.hidden_size;
        if l > self.config.max_position_embeddings {
            return Err(TaggerError::Shape(format!(
                "sequence length {l} exceeds {} positions",
                self.config.max_position_embeddings
            )));
        }
        let words = self.word.embedding(&ids.flatten_all()?)?.reshape((b, l, h))?;
        let positions = self.position.narrow(0, 0, l)?.unsqueeze(0)?;
        let types = self.token_type.narrow(0, 0, 1)?.unsqueeze(0)?;
        let x = words.broadcast_add(&positions)?.broadcast_add(&types)?;
        let mut x = dropout(&self.emb_norm.forward(&x)?, self.config.hidden_dropout_prob, rng.as_deref_mut())?;

        let heads = self.config.num_attention_heads;
        let head_dim = h / heads;
        let scale = 1.0 / (head_dim as f64).sqrt();
        // [B, 1, 1, L] additive mask
        let bias = ((mask.ones_like()? - mask)? * -10000.0)?.reshape((b, 1, 1, l))?;
        let split = |t: Tensor| -> Result<Tensor, TaggerError> {
            Ok(t.reshape((b, l, heads, head_dim))?.transpose(1, 2)?.contiguous()?)
        };
        for layer in &self.layers {
            let q = split(layer.query.forward(&x)?)?;
            let k = split(layer.key.forward(&x)?)?;
            let v = split(layer.value.forward(&x)?)?;
            let scores = (q.matmul(&k.t()?.contiguous()?)? * scale)?.broadcast_add(&bias)?;
            let probs = candle_nn::ops::softmax(&scores, D::Minus1)?;
            let probs = dropout(&probs, self.config.attention_probs_dropout_prob, rng.as_deref_mut())?;
            let ctx = probs.matmul(&v)?.transpose(1, 2)?.contiguous()?.reshape((b, l, h))?;
            let attn = dropout(&layer.attn_out.forward(&ctx)?, self.config.hidden_dropout_prob, rng.as_deref_mut())?;
            x = layer.attn_norm.forward(&(attn + &x)?)?;
            let inter = layer.intermediate.forward(&x)?.gelu_erf()?;
            let out = dropout(&layer.output.forward(&inter)?, self.config.hidden_dropout_prob, rng.as_deref_mut())?;
            x = layer.out_norm.forward(&(out + &x)?)?;
        }
        Ok(x)
    }
}

/// Map a published checkpoint's tensor names onto ours. Returns `None` for
/// tensors the encoder does not use (pooler, pre-training heads).
pub fn map_pretrained_name(name: &str) -> Option<String> {
    let name = name.strip_prefix("bert.").unwrap_or(name);
    if name.starts_with("cls.") || name.starts_with("pooler.") {
        return None;
    }
    let name = if let Some(stem) = name.strip_suffix(".gamma") {
        format!("{stem}.weight")
    } else if let Some(stem) = name.strip_suffix(".beta") {
        format!("{stem}.bias")
    } else {
        name.to_string()
    };
    Some(name)
}

/// Load pretrained weights into `params`. The word embedding matrix may be
/// shorter than ours (marker tokens appended to the vocabulary); the extra
/// rows keep their fresh initialization.
pub fn load_pretrained(params: &ParamStore, path: &Path) -> Result<(), TaggerError> {
    if !path.exists() {
        return Err(TaggerError::MissingCheckpoint(path.display().to_string()));
    }
    let raw = candle_core::safetensors::load(path, params.device())?;
    let mut mapped: HashMap<String, Tensor> = raw
        .into_iter()
        .filter_map(|(k, v)| map_pretrained_name(&k).map(|k| (k, v)))
        .collect();
    let key = "embeddings.word_embeddings.weight";
    if let (Some(loaded), Some(ours)) = (mapped.get(key), params.get(key)) {
        let (have, _) = loaded.dims2()?;
        let (want, _) = ours.dims2()?;
        if have < want {
            let extra = ours.as_tensor().narrow(0, have, want - have)?;
            let joined = Tensor::cat(&[&loaded.to_dtype(DType::F32)?, &extra], 0)?;
            mapped.insert(key.to_string(), joined);
        } else if have > want {
            return Err(TaggerError::Checkpoint(format!(
                "checkpoint vocabulary ({have}) is larger than the tokenizer's ({want})"
            )));
        }
    }
    let unused = params.assign(&mapped)?;
    if !unused.is_empty() {
        log::debug!("ignored {} checkpoint tensors: {:?}", unused.len(), unused);
    }
    Ok(())
}

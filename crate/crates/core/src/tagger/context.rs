//! Small trainable encoder for tests and smoke runs: token embeddings
//! followed by residual layers that mix each position with its neighbours.

use candle_core::{Tensor, D};
use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use super::TaggerError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub layers: usize,
}

#[derive(Debug)]
pub struct ContextEncoder {
    embeddings: Tensor,
    layers: Vec<(Tensor, Tensor)>,
}

impl ContextEncoder {
    pub fn new(config: &ContextConfig, params: &mut ParamStore) -> Result<Self, TaggerError> {
        let h = config.hidden_size;
        let embeddings = params.normal("embeddings.weight", &[config.vocab_size, h], 0.5)?;
        let std = (1.0 / (3.0 * h as f32)).sqrt();
        let layers = (0..config.layers)
            .map(|i| {
                Ok((
                    params.normal(&format!("context.{i}.weight"), &[3 * h, h], std)?,
                    params.zeros(&format!("context.{i}.bias"), &[h])?,
                ))
            })
            .collect::<Result<_, TaggerError>>()?;
        Ok(Self { embeddings, layers })
    }

    /// `ids` is `[B, L]` u32, `mask` is `[B, L]` f32; returns `[B, L, H]`.
    pub fn forward(&self, ids: &Tensor, mask: &Tensor) -> Result<Tensor, TaggerError> {
        let (b, l) = ids.dims2()?;
        let h_dim = self.embeddings.dim(1)?;
        let mask = mask.unsqueeze(D::Minus1)?;
        let mut h = self
            .embeddings
            .embedding(&ids.flatten_all()?)?
            .reshape((b, l, h_dim))?
            .broadcast_mul(&mask)?;
        for (w, bias) in &self.layers {
            let left = h.pad_with_zeros(1, 1, 0)?.narrow(1, 0, l)?;
            let right = h.pad_with_zeros(1, 0, 1)?.narrow(1, 1, l)?;
            let x = Tensor::cat(&[&left, &h, &right], 2)?;
            let mixed = x
                .reshape((b * l, 3 * h_dim))?
                .matmul(w)?
                .broadcast_add(bias)?
                .tanh()?
                .reshape((b, l, h_dim))?;
            h = (h + mixed)?.broadcast_mul(&mask)?;
        }
        Ok(h)
    }
}

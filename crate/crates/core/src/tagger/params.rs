//! Named trainable parameters with seeded initialization.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use candle_core::{DType, Device, Tensor, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::TaggerError;

#[derive(Debug)]
pub struct ParamStore {
    vars: BTreeMap<String, Var>,
    rng: ChaCha8Rng,
    device: Device,
}

impl ParamStore {
    pub fn new(seed: u64, device: Device) -> Self {
        Self {
            vars: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            device,
        }
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    fn insert(&mut self, name: &str, t: Tensor) -> Result<Tensor, TaggerError> {
        let var = Var::from_tensor(&t)?;
        let out = var.as_tensor().clone();
        self.vars.insert(name.to_string(), var);
        Ok(out)
    }

    pub fn normal(&mut self, name: &str, shape: &[usize], std: f32) -> Result<Tensor, TaggerError> {
        let dist = Normal::new(0.0f32, std).map_err(|e| TaggerError::Config(e.to_string()))?;
        let n: usize = shape.iter().product();
        let data: Vec<f32> = (0..n).map(|_| dist.sample(&mut self.rng)).collect();
        let t = Tensor::from_vec(data, shape, &self.device)?;
        self.insert(name, t)
    }

    pub fn zeros(&mut self, name: &str, shape: &[usize]) -> Result<Tensor, TaggerError> {
        let t = Tensor::zeros(shape, DType::F32, &self.device)?;
        self.insert(name, t)
    }

    pub fn ones(&mut self, name: &str, shape: &[usize]) -> Result<Tensor, TaggerError> {
        let t = Tensor::ones(shape, DType::F32, &self.device)?;
        self.insert(name, t)
    }

    pub fn vars(&self) -> Vec<Var> {
        self.vars.values().cloned().collect()
    }

    pub fn get(&self, name: &str) -> Option<&Var> {
        self.vars.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vars.keys().map(String::as_str)
    }

    pub fn parameter_count(&self) -> usize {
        self.vars.values().map(|v| v.elem_count()).sum()
    }

    /// Copy of every value, for later [`ParamStore::restore`].
    pub fn snapshot(&self) -> Result<BTreeMap<String, Tensor>, TaggerError> {
        self.vars
            .iter()
            .map(|(k, v)| Ok((k.clone(), v.as_tensor().copy()?)))
            .collect()
    }

    pub fn restore(&self, values: &BTreeMap<String, Tensor>) -> Result<(), TaggerError> {
        for (k, v) in &self.vars {
            let src = values
                .get(k)
                .ok_or_else(|| TaggerError::Checkpoint(format!("no value for parameter {k}")))?;
            v.set(src)?;
        }
        Ok(())
    }

    /// Overwrite parameters from `values`; every parameter must be present
    /// with a matching shape. Returns the names in `values` left unused.
    pub fn assign(&self, values: &HashMap<String, Tensor>) -> Result<Vec<String>, TaggerError> {
        for (k, v) in &self.vars {
            let src = values
                .get(k)
                .ok_or_else(|| TaggerError::Checkpoint(format!("missing tensor {k}")))?;
            if src.dims() != v.dims() {
                return Err(TaggerError::Checkpoint(format!(
                    "tensor {k} has shape {:?}, expected {:?}",
                    src.dims(),
                    v.dims()
                )));
            }
            v.set(&src.to_dtype(DType::F32)?.to_device(&self.device)?)?;
        }
        let mut unused: Vec<String> = values.keys().filter(|k| !self.vars.contains_key(*k)).cloned().collect();
        unused.sort();
        Ok(unused)
    }

    pub fn save(&self, path: &Path) -> Result<(), TaggerError> {
        let map: HashMap<String, Tensor> = self
            .vars
            .iter()
            .map(|(k, v)| (k.clone(), v.as_tensor().clone()))
            .collect();
        candle_core::safetensors::save(&map, path)?;
        Ok(())
    }

    pub fn load(&self, path: &Path) -> Result<(), TaggerError> {
        if !path.exists() {
            return Err(TaggerError::MissingCheckpoint(path.display().to_string()));
        }
        let values = candle_core::safetensors::load(path, &self.device)?;
        self.assign(&values)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_init_is_reproducible() {
        let mut a = ParamStore::new(7, Device::Cpu);
        let mut b = ParamStore::new(7, Device::Cpu);
        let ta = a.normal("w", &[3, 4], 0.02).unwrap();
        let tb = b.normal("w", &[3, 4], 0.02).unwrap();
        assert_eq!(ta.to_vec2::<f32>().unwrap(), tb.to_vec2::<f32>().unwrap());
    }

    #[test]
    fn save_load_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = ParamStore::new(1, Device::Cpu);
        let w = a.normal("w", &[2, 2], 1.0).unwrap();
        a.zeros("b", &[2]).unwrap();
        let path = dir.path().join("p.safetensors");
        a.save(&path).unwrap();
        let snap = a.snapshot().unwrap();
        a.get("w").unwrap().set(&Tensor::ones((2, 2), DType::F32, &Device::Cpu).unwrap()).unwrap();
        assert_eq!(w.to_vec2::<f32>().unwrap(), vec![vec![1.0; 2]; 2]);
        a.restore(&snap).unwrap();
        assert_ne!(w.to_vec2::<f32>().unwrap(), vec![vec![1.0; 2]; 2]);

        let mut b = ParamStore::new(99, Device::Cpu);
        let wb = b.normal("w", &[2, 2], 1.0).unwrap();
        b.zeros("b", &[2]).unwrap();
        b.load(&path).unwrap();
        assert_eq!(wb.to_vec2::<f32>().unwrap(), w.to_vec2::<f32>().unwrap());
        assert!(matches!(b.load(&dir.path().join("nope")), Err(TaggerError::MissingCheckpoint(_))));
    }
}

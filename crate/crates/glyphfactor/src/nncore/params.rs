use std::collections::BTreeMap;

use crate::{GlyphError, Result};

use super::tensor::Tensor;

/// Gradient accumulator keyed by parameter path. Only parameters that
/// actually received gradients appear; the optimizer leaves the rest alone.
#[derive(Clone, Debug, Default)]
pub struct GradStore {
    map: BTreeMap<String, Tensor>,
}

impl GradStore {
    pub fn new() -> GradStore {
        GradStore::default()
    }

    pub fn accumulate(&mut self, path: &str, grad: Tensor) {
        match self.map.get_mut(path) {
            Some(existing) => {
                debug_assert_eq!(existing.shape(), grad.shape(), "grad shape for {path}");
                existing.add_scaled(&grad, 1.0);
            }
            None => {
                self.map.insert(path.to_string(), grad);
            }
        }
    }

    /// Fold another store into this one (used to combine per-example grads in
    /// a fixed order, keeping training deterministic).
    pub fn merge(&mut self, other: GradStore) {
        for (path, grad) in other.map {
            self.accumulate(&path, grad);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.map.values_mut() {
            t.scale(factor);
        }
    }

    pub fn get(&self, path: &str) -> Option<&Tensor> {
        self.map.get(path)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Look up one scalar parameter coordinate by path, for gradient checks.
pub fn param_get(params: &[(String, &Tensor)], path: &str, index: usize) -> Result<f64> {
    let (_, t) = params
        .iter()
        .find(|(p, _)| p == path)
        .ok_or_else(|| GlyphError::Invalid(format!("unknown parameter path {path}")))?;
    t.data()
        .get(index)
        .copied()
        .ok_or_else(|| GlyphError::Invalid(format!("index {index} out of range for {path}")))
}

pub fn param_set(params: &mut [(String, &mut Tensor)], path: &str, index: usize, value: f64) -> Result<()> {
    let (_, t) = params
        .iter_mut()
        .find(|(p, _)| p == path)
        .ok_or_else(|| GlyphError::Invalid(format!("unknown parameter path {path}")))?;
    let slot = t
        .data_mut()
        .get_mut(index)
        .ok_or_else(|| GlyphError::Invalid(format!("index {index} out of range for {path}")))?;
    *slot = value;
    Ok(())
}

use std::collections::BTreeMap;

use crate::{GlyphError, Result};

use super::params::GradStore;
use super::tensor::Tensor;

#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> AdamConfig {
        AdamConfig {
            alpha: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam optimizer state: per-parameter first/second moment accumulators plus
/// the shared step counter used for bias correction.
pub struct AdamState {
    pub config: AdamConfig,
    t: u64,
    m: BTreeMap<String, Tensor>,
    v: BTreeMap<String, Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> AdamState {
        AdamState {
            config,
            t: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// Bias-corrected Adam update applied in place. Parameters without an
    /// entry in `grads` are left untouched, as are their moment accumulators.
    pub fn step(&mut self, params: &mut [(String, &mut Tensor)], grads: &GradStore) -> Result<()> {
        self.t += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        for (path, param) in params.iter_mut() {
            let Some(grad) = grads.get(path) else {
                continue;
            };
            if grad.shape() != param.shape() {
                return Err(GlyphError::shape(
                    format!("adam_step on {path}"),
                    format!("{:?}", param.shape()),
                    format!("{:?}", grad.shape()),
                ));
            }
            let m = self
                .m
                .entry(path.clone())
                .or_insert_with(|| Tensor::zeros(param.shape()));
            let v = self
                .v
                .entry(path.clone())
                .or_insert_with(|| Tensor::zeros(param.shape()));
            for ((p, g), (mv, vv)) in param
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()))
            {
                *mv = c.beta1 * *mv + (1.0 - c.beta1) * g;
                *vv = c.beta2 * *vv + (1.0 - c.beta2) * g * g;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *p -= c.alpha * m_hat / (v_hat.sqrt() + c.epsilon);
            }
        }
        Ok(())
    }
}

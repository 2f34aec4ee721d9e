use rand::Rng;

use crate::{GlyphError, Result};

use super::init::uniform_fan_in;
use super::tensor::Tensor;

/// Fully connected layer: y = W x + b over rank-1 inputs.
#[derive(Clone, Debug)]
pub struct FullyConnected {
    pub weight: Tensor,
    pub bias: Tensor,
}

pub struct FullyConnectedGrads {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl FullyConnected {
    pub fn new<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> FullyConnected {
        FullyConnected {
            weight: uniform_fan_in(rng, &[out_dim, in_dim], in_dim),
            bias: Tensor::zeros(&[out_dim]),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    fn check_input(&self, x: &Tensor) -> Result<usize> {
        let n = x.dims1()?;
        if n != self.in_dim() {
            return Err(GlyphError::shape(
                "FullyConnected",
                format!("input dim {}", self.in_dim()),
                format!("{n}"),
            ));
        }
        Ok(n)
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let n = self.check_input(x)?;
        let out_dim = self.out_dim();
        let mut out = vec![0.0; out_dim];
        let wd = self.weight.data();
        let xd = x.data();
        for (o, out_v) in out.iter_mut().enumerate() {
            let row = &wd[o * n..(o + 1) * n];
            let mut acc = self.bias.data()[o];
            for (w, xv) in row.iter().zip(xd) {
                acc += w * xv;
            }
            *out_v = acc;
        }
        Tensor::from_vec(&[out_dim], out)
    }

    pub fn backward(&self, x: &Tensor, grad_out: &Tensor) -> Result<(Tensor, FullyConnectedGrads)> {
        let n = self.check_input(x)?;
        let out_dim = self.out_dim();
        if grad_out.dims1()? != out_dim {
            return Err(GlyphError::shape(
                "FullyConnected::backward",
                format!("{out_dim}"),
                format!("{:?}", grad_out.shape()),
            ));
        }
        let wd = self.weight.data();
        let xd = x.data();
        let god = grad_out.data();
        let mut gx = vec![0.0; n];
        let mut gw = vec![0.0; wd.len()];
        for o in 0..out_dim {
            let g = god[o];
            let row = &wd[o * n..(o + 1) * n];
            let gw_row = &mut gw[o * n..(o + 1) * n];
            for ((gxv, w), (gwv, xv)) in gx.iter_mut().zip(row).zip(gw_row.iter_mut().zip(xd)) {
                *gxv += g * w;
                *gwv = g * xv;
            }
        }
        Ok((
            Tensor::from_vec(&[n], gx)?,
            FullyConnectedGrads {
                weight: Tensor::from_vec(self.weight.shape(), gw)?,
                bias: grad_out.clone(),
            },
        ))
    }
}

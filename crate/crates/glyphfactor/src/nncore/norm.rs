use crate::{GlyphError, Result};

use super::tensor::Tensor;

pub const INSTANCE_NORM_EPS: f64 = 1e-5;

/// Instance normalization: each channel is shifted to zero mean and scaled to
/// unit variance (population variance over its H*W cells) before a learned
/// per-channel affine.
#[derive(Clone, Debug)]
pub struct InstanceNorm {
    pub gain: Tensor,
    pub shift: Tensor,
    pub eps: f64,
}

pub struct InstanceNormGrads {
    pub gain: Tensor,
    pub shift: Tensor,
}

impl InstanceNorm {
    pub fn new(channels: usize) -> InstanceNorm {
        InstanceNorm {
            gain: Tensor::filled(&[channels], 1.0),
            shift: Tensor::zeros(&[channels]),
            eps: INSTANCE_NORM_EPS,
        }
    }

    pub fn channels(&self) -> usize {
        self.gain.shape()[0]
    }

    fn check_input(&self, x: &Tensor) -> Result<(usize, usize, usize)> {
        let (c, h, w) = x.dims3()?;
        if c != self.channels() {
            return Err(GlyphError::shape(
                "InstanceNorm",
                format!("{} channels", self.channels()),
                format!("{c}"),
            ));
        }
        Ok((c, h, w))
    }

    fn channel_stats(x_c: &[f64]) -> (f64, f64) {
        let n = x_c.len() as f64;
        let mean = x_c.iter().sum::<f64>() / n;
        let var = x_c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        (mean, var)
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (c, h, w) = self.check_input(x)?;
        let hw = h * w;
        let mut out = vec![0.0; c * hw];
        for ch in 0..c {
            let x_c = &x.data()[ch * hw..(ch + 1) * hw];
            let (mean, var) = Self::channel_stats(x_c);
            let inv_std = 1.0 / (var + self.eps).sqrt();
            let g = self.gain.data()[ch];
            let s = self.shift.data()[ch];
            for (o, v) in out[ch * hw..(ch + 1) * hw].iter_mut().zip(x_c) {
                *o = g * (v - mean) * inv_std + s;
            }
        }
        Tensor::from_vec(&[c, h, w], out)
    }

    pub fn backward(&self, x: &Tensor, grad_out: &Tensor) -> Result<(Tensor, InstanceNormGrads)> {
        let (c, h, w) = self.check_input(x)?;
        if grad_out.shape() != x.shape() {
            return Err(GlyphError::shape(
                "InstanceNorm::backward",
                format!("{:?}", x.shape()),
                format!("{:?}", grad_out.shape()),
            ));
        }
        let hw = h * w;
        let n = hw as f64;
        let mut gx = vec![0.0; c * hw];
        let mut gg = vec![0.0; c];
        let mut gs = vec![0.0; c];
        for ch in 0..c {
            let x_c = &x.data()[ch * hw..(ch + 1) * hw];
            let go_c = &grad_out.data()[ch * hw..(ch + 1) * hw];
            let (mean, var) = Self::channel_stats(x_c);
            let inv_std = 1.0 / (var + self.eps).sqrt();
            let g = self.gain.data()[ch];

            let mut sum_go = 0.0;
            let mut sum_go_xhat = 0.0;
            for (gv, xv) in go_c.iter().zip(x_c) {
                let xhat = (xv - mean) * inv_std;
                sum_go += gv;
                sum_go_xhat += gv * xhat;
            }
            gg[ch] = sum_go_xhat;
            gs[ch] = sum_go;
            let mean_go = sum_go / n;
            let mean_go_xhat = sum_go_xhat / n;
            for ((gxv, gv), xv) in gx[ch * hw..(ch + 1) * hw].iter_mut().zip(go_c).zip(x_c) {
                let xhat = (xv - mean) * inv_std;
                *gxv = g * inv_std * (gv - mean_go - xhat * mean_go_xhat);
            }
        }
        Ok((
            Tensor::from_vec(&[c, h, w], gx)?,
            InstanceNormGrads {
                gain: Tensor::from_vec(&[c], gg)?,
                shift: Tensor::from_vec(&[c], gs)?,
            },
        ))
    }
}

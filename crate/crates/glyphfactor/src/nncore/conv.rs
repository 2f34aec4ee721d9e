use rand::Rng;

use crate::{GlyphError, Result};

use super::init::uniform_fan_in;
use super::tensor::Tensor;

/// Stride-1 2D convolution (cross-correlation, no kernel flip).
///
/// Weight layout is (out_channels, in_channels, k, k); zero padding keeps the
/// spatial size fixed for the 3x3/pad-1 and 1x1/pad-0 configurations used by
/// the decoder and discriminators.
#[derive(Clone, Debug)]
pub struct Conv2d {
    pub weight: Tensor,
    pub bias: Tensor,
    pub padding: usize,
}

pub struct Conv2dGrads {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Conv2d {
    pub fn new<R: Rng>(in_ch: usize, out_ch: usize, kernel: usize, padding: usize, rng: &mut R) -> Conv2d {
        let fan_in = in_ch * kernel * kernel;
        Conv2d {
            weight: uniform_fan_in(rng, &[out_ch, in_ch, kernel, kernel], fan_in),
            bias: Tensor::zeros(&[out_ch]),
            padding,
        }
    }

    pub fn conv3x3<R: Rng>(in_ch: usize, out_ch: usize, rng: &mut R) -> Conv2d {
        Conv2d::new(in_ch, out_ch, 3, 1, rng)
    }

    pub fn conv1x1<R: Rng>(in_ch: usize, out_ch: usize, rng: &mut R) -> Conv2d {
        Conv2d::new(in_ch, out_ch, 1, 0, rng)
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn kernel(&self) -> usize {
        self.weight.shape()[2]
    }

    fn check_input(&self, x: &Tensor) -> Result<(usize, usize, usize)> {
        let (ci, h, w) = x.dims3()?;
        if ci != self.in_channels() {
            return Err(GlyphError::shape(
                "Conv2d::forward",
                format!("{} input channels", self.in_channels()),
                format!("{ci}"),
            ));
        }
        let k = self.kernel();
        if h + 2 * self.padding < k || w + 2 * self.padding < k {
            return Err(GlyphError::shape(
                "Conv2d::forward",
                format!("spatial dims >= {k} after padding"),
                format!("{h}x{w}"),
            ));
        }
        Ok((ci, h, w))
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (ci, h, w) = self.check_input(x)?;
        let co = self.out_channels();
        let k = self.kernel();
        let p = self.padding as isize;
        let oh = h + 2 * self.padding - k + 1;
        let ow = w + 2 * self.padding - k + 1;
        let mut out = vec![0.0; co * oh * ow];
        let xd = x.data();
        let wd = self.weight.data();
        let bd = self.bias.data();

        for oc in 0..co {
            let out_c = &mut out[oc * oh * ow..(oc + 1) * oh * ow];
            out_c.fill(bd[oc]);
            for ic in 0..ci {
                let x_c = &xd[ic * h * w..(ic + 1) * h * w];
                for ky in 0..k {
                    for kx in 0..k {
                        let wv = wd[((oc * ci + ic) * k + ky) * k + kx];
                        let dy = ky as isize - p;
                        let dx = kx as isize - p;
                        let y0 = (-dy).max(0) as usize;
                        let y1 = ((oh as isize).min(h as isize - dy)).max(0) as usize;
                        let x0 = (-dx).max(0) as usize;
                        let x1 = ((ow as isize).min(w as isize - dx)).max(0) as usize;
                        if x0 >= x1 {
                            continue;
                        }
                        for yy in y0..y1 {
                            let sy = (yy as isize + dy) as usize;
                            let sx = (x0 as isize + dx) as usize;
                            let dst = &mut out_c[yy * ow + x0..yy * ow + x1];
                            let src = &x_c[sy * w + sx..sy * w + sx + (x1 - x0)];
                            for (d, s) in dst.iter_mut().zip(src) {
                                *d += wv * s;
                            }
                        }
                    }
                }
            }
        }
        Tensor::from_vec(&[co, oh, ow], out)
    }

    /// Gradients of a scalar loss wrt input, weight, and bias given the
    /// forward input and upstream gradient.
    pub fn backward(&self, x: &Tensor, grad_out: &Tensor) -> Result<(Tensor, Conv2dGrads)> {
        let (ci, h, w) = self.check_input(x)?;
        let co = self.out_channels();
        let k = self.kernel();
        let p = self.padding as isize;
        let oh = h + 2 * self.padding - k + 1;
        let ow = w + 2 * self.padding - k + 1;
        let (gc, goh, gow) = grad_out.dims3()?;
        if (gc, goh, gow) != (co, oh, ow) {
            return Err(GlyphError::shape(
                "Conv2d::backward",
                format!("({co}, {oh}, {ow})"),
                format!("({gc}, {goh}, {gow})"),
            ));
        }

        let xd = x.data();
        let god = grad_out.data();
        let wd = self.weight.data();
        let mut gx = vec![0.0; ci * h * w];
        let mut gw = vec![0.0; wd.len()];
        let mut gb = vec![0.0; co];

        for oc in 0..co {
            let go_c = &god[oc * oh * ow..(oc + 1) * oh * ow];
            gb[oc] = go_c.iter().sum();
            for ic in 0..ci {
                let x_c = &xd[ic * h * w..(ic + 1) * h * w];
                let gx_c = &mut gx[ic * h * w..(ic + 1) * h * w];
                for ky in 0..k {
                    for kx in 0..k {
                        let widx = ((oc * ci + ic) * k + ky) * k + kx;
                        let wv = wd[widx];
                        let dy = ky as isize - p;
                        let dx = kx as isize - p;
                        let y0 = (-dy).max(0) as usize;
                        let y1 = ((oh as isize).min(h as isize - dy)).max(0) as usize;
                        let x0 = (-dx).max(0) as usize;
                        let x1 = ((ow as isize).min(w as isize - dx)).max(0) as usize;
                        if x0 >= x1 {
                            continue;
                        }
                        let mut wacc = 0.0;
                        for yy in y0..y1 {
                            let sy = (yy as isize + dy) as usize;
                            let sx = (x0 as isize + dx) as usize;
                            let go_row = &go_c[yy * ow + x0..yy * ow + x1];
                            let x_row = &x_c[sy * w + sx..sy * w + sx + (x1 - x0)];
                            let gx_row = &mut gx_c[sy * w + sx..sy * w + sx + (x1 - x0)];
                            for ((g, xs), gxs) in go_row.iter().zip(x_row).zip(gx_row) {
                                wacc += g * xs;
                                *gxs += wv * g;
                            }
                        }
                        gw[widx] += wacc;
                    }
                }
            }
        }

        Ok((
            Tensor::from_vec(&[ci, h, w], gx)?,
            Conv2dGrads {
                weight: Tensor::from_vec(self.weight.shape(), gw)?,
                bias: Tensor::from_vec(&[co], gb)?,
            },
        ))
    }
}

use rand::Rng;

use crate::{GlyphError, Result};

use super::init::uniform_fan_in;
use super::tensor::Tensor;

/// 2x2 transpose convolution with stride 2: each input cell scatters a scaled
/// copy of the kernel into a disjoint 2x2 output tile, doubling both spatial
/// dimensions. Weight layout is (in_channels, out_channels, 2, 2).
#[derive(Clone, Debug)]
pub struct TConv2x2 {
    pub weight: Tensor,
    pub bias: Tensor,
}

pub struct TConv2x2Grads {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl TConv2x2 {
    pub fn new<R: Rng>(in_ch: usize, out_ch: usize, rng: &mut R) -> TConv2x2 {
        TConv2x2 {
            weight: uniform_fan_in(rng, &[in_ch, out_ch, 2, 2], in_ch * 4),
            bias: Tensor::zeros(&[out_ch]),
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    fn check_input(&self, x: &Tensor) -> Result<(usize, usize, usize)> {
        let (ci, h, w) = x.dims3()?;
        if ci != self.in_channels() {
            return Err(GlyphError::shape(
                "TConv2x2::forward",
                format!("{} input channels", self.in_channels()),
                format!("{ci}"),
            ));
        }
        Ok((ci, h, w))
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (ci, h, w) = self.check_input(x)?;
        let co = self.out_channels();
        let (oh, ow) = (2 * h, 2 * w);
        let mut out = vec![0.0; co * oh * ow];
        let xd = x.data();
        let wd = self.weight.data();
        let bd = self.bias.data();

        for oc in 0..co {
            out[oc * oh * ow..(oc + 1) * oh * ow].fill(bd[oc]);
        }
        for ic in 0..ci {
            let x_c = &xd[ic * h * w..(ic + 1) * h * w];
            for oc in 0..co {
                let out_c = &mut out[oc * oh * ow..(oc + 1) * oh * ow];
                let wbase = (ic * co + oc) * 4;
                for ky in 0..2 {
                    for kx in 0..2 {
                        let wv = wd[wbase + ky * 2 + kx];
                        for yy in 0..h {
                            let orow = (2 * yy + ky) * ow + kx;
                            let xrow = &x_c[yy * w..(yy + 1) * w];
                            for (xx, xv) in xrow.iter().enumerate() {
                                out_c[orow + 2 * xx] += wv * xv;
                            }
                        }
                    }
                }
            }
        }
        Tensor::from_vec(&[co, oh, ow], out)
    }

    pub fn backward(&self, x: &Tensor, grad_out: &Tensor) -> Result<(Tensor, TConv2x2Grads)> {
        let (ci, h, w) = self.check_input(x)?;
        let co = self.out_channels();
        let (oh, ow) = (2 * h, 2 * w);
        let (gc, goh, gow) = grad_out.dims3()?;
        if (gc, goh, gow) != (co, oh, ow) {
            return Err(GlyphError::shape(
                "TConv2x2::backward",
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
            gb[oc] = god[oc * oh * ow..(oc + 1) * oh * ow].iter().sum();
        }
        for ic in 0..ci {
            let x_c = &xd[ic * h * w..(ic + 1) * h * w];
            let gx_c = &mut gx[ic * h * w..(ic + 1) * h * w];
            for oc in 0..co {
                let go_c = &god[oc * oh * ow..(oc + 1) * oh * ow];
                let wbase = (ic * co + oc) * 4;
                for ky in 0..2 {
                    for kx in 0..2 {
                        let wv = wd[wbase + ky * 2 + kx];
                        let mut wacc = 0.0;
                        for yy in 0..h {
                            let orow = (2 * yy + ky) * ow + kx;
                            let xrow = &x_c[yy * w..(yy + 1) * w];
                            let gxrow = &mut gx_c[yy * w..(yy + 1) * w];
                            for xx in 0..w {
                                let g = go_c[orow + 2 * xx];
                                wacc += g * xrow[xx];
                                gxrow[xx] += wv * g;
                            }
                        }
                        gw[wbase + ky * 2 + kx] += wacc;
                    }
                }
            }
        }
        Ok((
            Tensor::from_vec(&[ci, h, w], gx)?,
            TConv2x2Grads {
                weight: Tensor::from_vec(self.weight.shape(), gw)?,
                bias: Tensor::from_vec(&[co], gb)?,
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::gradcheck;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_cell_scatters_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut t = TConv2x2::new(1, 1, &mut rng);
        t.weight = Tensor::from_vec(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        t.bias = Tensor::zeros(&[1]);
        let x = Tensor::from_vec(&[1, 1, 1], vec![1.0]).unwrap();
        let y = t.forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 2, 2]);
        assert_eq!(y.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn ones_kernel_on_constant_input_stays_constant() {
        // Stride 2 with a 2x2 kernel tiles the output without overlap, so a
        // constant input c maps to a constant output c.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut t = TConv2x2::new(1, 1, &mut rng);
        t.weight = Tensor::filled(&[1, 1, 2, 2], 1.0);
        t.bias = Tensor::zeros(&[1]);
        let x = Tensor::filled(&[1, 3, 3], 0.7);
        let y = t.forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 6, 6]);
        assert!(y.data().iter().all(|v| (v - 0.7).abs() < 1e-15));
    }

    /// Naive scatter-loop oracle.
    fn tconv_reference(x: &Tensor, w: &Tensor, b: &Tensor) -> Tensor {
        let (ci, h, wid) = x.dims3().unwrap();
        let co = w.shape()[1];
        let mut out = Tensor::zeros(&[co, 2 * h, 2 * wid]);
        for oc in 0..co {
            for v in out.data_mut()[oc * 4 * h * wid..(oc + 1) * 4 * h * wid].iter_mut() {
                *v = b.data()[oc];
            }
        }
        for ic in 0..ci {
            for oc in 0..co {
                for yy in 0..h {
                    for xx in 0..wid {
                        let xv = x.data()[(ic * h + yy) * wid + xx];
                        for ky in 0..2 {
                            for kx in 0..2 {
                                let wv = w.data()[((ic * co + oc) * 2 + ky) * 2 + kx];
                                let oy = 2 * yy + ky;
                                let ox = 2 * xx + kx;
                                out.data_mut()[(oc * 2 * h + oy) * 2 * wid + ox] += xv * wv;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn random_input_matches_reference() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = TConv2x2::new(3, 2, &mut rng);
        let x = Tensor::from_vec(&[3, 4, 4], (0..48).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let got = t.forward(&x).unwrap();
        let want = tconv_reference(&x, &t.weight, &t.bias);
        assert_eq!(got.shape(), want.shape());
        for (a, b) in got.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut t = TConv2x2::new(2, 2, &mut rng);
        let x = Tensor::from_vec(&[2, 3, 3], (0..18).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let coeffs = Tensor::from_vec(&[2, 6, 6], (0..72).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let loss = |t: &TConv2x2, x: &Tensor| -> f64 {
            t.forward(x).unwrap().data().iter().zip(coeffs.data()).map(|(a, b)| a * b).sum()
        };
        let (gx, grads) = t.backward(&x, &coeffs).unwrap();
        let mut max_rel: f64 = 0.0;
        let mut x_mut = x.clone();
        for i in 0..x_mut.numel() {
            let fd = gradcheck::central_diff(|v| {
                x_mut.data_mut()[i] = v;
                loss(&t, &x_mut)
            }, x.data()[i], 1e-3);
            x_mut.data_mut()[i] = x.data()[i];
            max_rel = max_rel.max(gradcheck::relative_error(gx.data()[i], fd));
        }
        for i in 0..t.weight.numel() {
            let orig = t.weight.data()[i];
            let fd = {
                t.weight.data_mut()[i] = orig + 1e-3;
                let lp = loss(&t, &x);
                t.weight.data_mut()[i] = orig - 1e-3;
                let lm = loss(&t, &x);
                t.weight.data_mut()[i] = orig;
                (lp - lm) / 2e-3
            };
            max_rel = max_rel.max(gradcheck::relative_error(grads.weight.data()[i], fd));
        }
        for i in 0..t.bias.numel() {
            let orig = t.bias.data()[i];
            let fd = {
                t.bias.data_mut()[i] = orig + 1e-3;
                let lp = loss(&t, &x);
                t.bias.data_mut()[i] = orig - 1e-3;
                let lm = loss(&t, &x);
                t.bias.data_mut()[i] = orig;
                (lp - lm) / 2e-3
            };
            max_rel = max_rel.max(gradcheck::relative_error(grads.bias.data()[i], fd));
        }
        assert!(max_rel < 1e-4, "max relative error {max_rel}");
    }
}

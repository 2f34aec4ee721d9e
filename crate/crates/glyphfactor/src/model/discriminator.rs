use rand::Rng;

use crate::nncore::{
    blurpool2x2, blurpool2x2_backward, relu, relu_backward, sigmoid_scalar, Conv2d, FullyConnected,
    GradStore, Tensor,
};
use crate::{GlyphError, Result};

use super::decoder::scale_channels;

/// Feature width produced by the discriminator encoder.
pub const ENCODER_FEATURE_DIM: usize = 16;

/// Hidden widths of the 7-layer discriminator head; the last layer is the
/// single match-probability unit.
pub const HEAD_WIDTHS: [usize; 7] = [64, 64, 48, 48, 32, 16, 1];

/// Channel schedule for the discriminator encoder: a stem convolution to
/// scaled(64) channels, then doubling at the first convolution of each of the
/// four downsampling blocks.
pub fn encoder_channels(width_mult: f64) -> [usize; 5] {
    [64, 128, 256, 512, 1024].map(|base| scale_channels(base, width_mult))
}

struct EncBlock {
    convs: [Conv2d; 3],
}

/// Image encoder: stem conv3x3, four blocks of [3 x (conv3x3 -> relu) ->
/// blurpool2x2] shrinking 64x64 to 4x4, and a dense layer to a 16-vector.
pub struct DiscEncoder {
    channels: [usize; 5],
    stem: Conv2d,
    blocks: Vec<EncBlock>,
    fc: FullyConnected,
}

struct EncBlockCache {
    input: Tensor,
    conv_outs: [Tensor; 3],
    relu_outs: [Tensor; 3],
}

pub struct EncCache {
    input: Tensor,
    stem_out: Tensor,
    blocks: Vec<EncBlockCache>,
    flat: Tensor,
    feat: Tensor,
}

impl EncCache {
    pub fn feature(&self) -> &Tensor {
        &self.feat
    }
}

impl DiscEncoder {
    pub fn new<R: Rng>(width_mult: f64, rng: &mut R) -> DiscEncoder {
        let channels = encoder_channels(width_mult);
        let stem = Conv2d::conv3x3(1, channels[0], rng);
        let blocks = (0..4)
            .map(|i| {
                let c_in = channels[i];
                let c_out = channels[i + 1];
                EncBlock {
                    convs: [
                        Conv2d::conv3x3(c_in, c_out, rng),
                        Conv2d::conv3x3(c_out, c_out, rng),
                        Conv2d::conv3x3(c_out, c_out, rng),
                    ],
                }
            })
            .collect();
        let fc = FullyConnected::new(channels[4] * 4 * 4, ENCODER_FEATURE_DIM, rng);
        DiscEncoder {
            channels,
            stem,
            blocks,
            fc,
        }
    }

    pub fn channels(&self) -> &[usize; 5] {
        &self.channels
    }

    pub fn forward(&self, image: &Tensor) -> Result<(Tensor, EncCache)> {
        let (c, h, w) = image.dims3()?;
        if (c, h, w) != (1, 64, 64) {
            return Err(GlyphError::shape(
                "DiscEncoder::forward",
                "(1, 64, 64)",
                format!("({c}, {h}, {w})"),
            ));
        }
        let stem_out = self.stem.forward(image)?;
        let mut x = stem_out.clone();
        let mut blocks = Vec::with_capacity(4);
        for block in &self.blocks {
            let input = x;
            let mut stage_in = input.clone();
            let mut conv_outs = Vec::with_capacity(3);
            let mut relu_outs = Vec::with_capacity(3);
            for conv in &block.convs {
                let z = conv.forward(&stage_in)?;
                let a = relu(&z);
                stage_in = a.clone();
                conv_outs.push(z);
                relu_outs.push(a);
            }
            x = blurpool2x2(&stage_in)?;
            blocks.push(EncBlockCache {
                input,
                conv_outs: conv_outs.try_into().map_err(|_| GlyphError::Invalid("block arity".into()))?,
                relu_outs: relu_outs.try_into().map_err(|_| GlyphError::Invalid("block arity".into()))?,
            });
        }
        let flat = x.reshape(&[self.channels[4] * 4 * 4])?;
        let feat = self.fc.forward(&flat)?;
        let cache = EncCache {
            input: image.clone(),
            stem_out,
            blocks,
            flat: flat.clone(),
            feat: feat.clone(),
        };
        Ok((feat, cache))
    }

    pub fn backward(
        &self,
        cache: &EncCache,
        grad_feat: &Tensor,
        prefix: &str,
        grads: &mut GradStore,
    ) -> Result<()> {
        let (g_flat, fc_grads) = self.fc.backward(&cache.flat, grad_feat)?;
        grads.accumulate(&format!("{prefix}.fc.weight"), fc_grads.weight);
        grads.accumulate(&format!("{prefix}.fc.bias"), fc_grads.bias);
        let mut g = g_flat.reshape(&[self.channels[4], 4, 4])?;

        for (i, block) in self.blocks.iter().enumerate().rev() {
            let c = &cache.blocks[i];
            // gradient through the blurpool into the last relu output
            let last = &c.relu_outs[2];
            g = blurpool2x2_backward(last.shape(), &g)?;
            for s in (0..3).rev() {
                let g_conv = relu_backward(&c.conv_outs[s], &g);
                let conv_in = if s == 0 { &c.input } else { &c.relu_outs[s - 1] };
                let (g_in, conv_grads) = block.convs[s].backward(conv_in, &g_conv)?;
                grads.accumulate(&format!("{prefix}.block{i}.conv{s}.weight"), conv_grads.weight);
                grads.accumulate(&format!("{prefix}.block{i}.conv{s}.bias"), conv_grads.bias);
                g = g_in;
            }
        }
        let (_, stem_grads) = self.stem.backward(&cache.input, &g)?;
        grads.accumulate(&format!("{prefix}.stem.weight"), stem_grads.weight);
        grads.accumulate(&format!("{prefix}.stem.bias"), stem_grads.bias);
        let _ = &cache.stem_out;
        Ok(())
    }

    pub fn named_params(&self, prefix: &str) -> Vec<(String, &Tensor)> {
        let mut out = vec![
            (format!("{prefix}.stem.weight"), &self.stem.weight),
            (format!("{prefix}.stem.bias"), &self.stem.bias),
        ];
        for (i, b) in self.blocks.iter().enumerate() {
            for (s, conv) in b.convs.iter().enumerate() {
                out.push((format!("{prefix}.block{i}.conv{s}.weight"), &conv.weight));
                out.push((format!("{prefix}.block{i}.conv{s}.bias"), &conv.bias));
            }
        }
        out.push((format!("{prefix}.fc.weight"), &self.fc.weight));
        out.push((format!("{prefix}.fc.bias"), &self.fc.bias));
        out
    }

    pub fn named_params_mut(&mut self, prefix: &str) -> Vec<(String, &mut Tensor)> {
        let mut out = vec![
            (format!("{prefix}.stem.weight"), &mut self.stem.weight),
            (format!("{prefix}.stem.bias"), &mut self.stem.bias),
        ];
        for (i, b) in self.blocks.iter_mut().enumerate() {
            for (s, conv) in b.convs.iter_mut().enumerate() {
                out.push((format!("{prefix}.block{i}.conv{s}.weight"), &mut conv.weight));
                out.push((format!("{prefix}.block{i}.conv{s}.bias"), &mut conv.bias));
            }
        }
        out.push((format!("{prefix}.fc.weight"), &mut self.fc.weight));
        out.push((format!("{prefix}.fc.bias"), &mut self.fc.bias));
        out
    }
}

/// Match-scoring head: the encoder feature concatenated with a candidate
/// embedding runs through 7 dense layers (relu between, sigmoid on the final
/// unit) to yield the probability that the pair belongs together.
pub struct DiscHead {
    layers: Vec<FullyConnected>,
}

pub struct HeadCache {
    inputs: Vec<Tensor>,
    pre_activations: Vec<Tensor>,
    feat_dim: usize,
}

impl DiscHead {
    pub fn new<R: Rng>(embedding_dim: usize, rng: &mut R) -> DiscHead {
        let mut layers = Vec::with_capacity(HEAD_WIDTHS.len());
        let mut in_dim = ENCODER_FEATURE_DIM + embedding_dim;
        for &out_dim in HEAD_WIDTHS.iter() {
            layers.push(FullyConnected::new(in_dim, out_dim, rng));
            in_dim = out_dim;
        }
        DiscHead { layers }
    }

    pub fn embedding_dim(&self) -> usize {
        self.layers[0].in_dim() - ENCODER_FEATURE_DIM
    }

    /// Returns the pre-sigmoid logit; probability = sigmoid(logit).
    pub fn forward(&self, feat: &Tensor, emb: &Tensor) -> Result<(f64, HeadCache)> {
        let feat_dim = feat.dims1()?;
        if feat_dim != ENCODER_FEATURE_DIM {
            return Err(GlyphError::shape(
                "DiscHead::forward",
                format!("feature dim {ENCODER_FEATURE_DIM}"),
                format!("{feat_dim}"),
            ));
        }
        if emb.dims1()? != self.embedding_dim() {
            return Err(GlyphError::shape(
                "DiscHead::forward",
                format!("embedding dim {}", self.embedding_dim()),
                format!("{}", emb.dims1()?),
            ));
        }
        let mut concat = Vec::with_capacity(feat_dim + emb.numel());
        concat.extend_from_slice(feat.data());
        concat.extend_from_slice(emb.data());
        let mut x = Tensor::from_vec(&[concat.len()], concat)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            inputs.push(x.clone());
            let z = layer.forward(&x)?;
            pre_activations.push(z.clone());
            x = if i + 1 < self.layers.len() { relu(&z) } else { z };
        }
        let logit = x.data()[0];
        Ok((
            logit,
            HeadCache {
                inputs,
                pre_activations,
                feat_dim,
            },
        ))
    }

    /// Backward from d(loss)/d(logit); returns gradients wrt the encoder
    /// feature and the embedding.
    pub fn backward(
        &self,
        cache: &HeadCache,
        grad_logit: f64,
        prefix: &str,
        grads: &mut GradStore,
    ) -> Result<(Tensor, Tensor)> {
        let mut g = Tensor::from_vec(&[1], vec![grad_logit])?;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if i + 1 < self.layers.len() {
                g = relu_backward(&cache.pre_activations[i], &g);
            }
            let (g_in, layer_grads) = layer.backward(&cache.inputs[i], &g)?;
            grads.accumulate(&format!("{prefix}.fc{i}.weight"), layer_grads.weight);
            grads.accumulate(&format!("{prefix}.fc{i}.bias"), layer_grads.bias);
            g = g_in;
        }
        let feat_grad = Tensor::from_vec(&[cache.feat_dim], g.data()[..cache.feat_dim].to_vec())?;
        let emb_grad = Tensor::from_vec(
            &[g.numel() - cache.feat_dim],
            g.data()[cache.feat_dim..].to_vec(),
        )?;
        Ok((feat_grad, emb_grad))
    }

    pub fn named_params(&self, prefix: &str) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("{prefix}.fc{i}.weight"), &l.weight));
            out.push((format!("{prefix}.fc{i}.bias"), &l.bias));
        }
        out
    }

    pub fn named_params_mut(&mut self, prefix: &str) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter_mut().enumerate() {
            out.push((format!("{prefix}.fc{i}.weight"), &mut l.weight));
            out.push((format!("{prefix}.fc{i}.bias"), &mut l.bias));
        }
        out
    }

    /// Force the head output to exactly 0.5 by zeroing the final layer.
    #[cfg(test)]
    pub fn pin_output_to_half(&mut self) {
        let last = self.layers.last_mut().unwrap();
        last.weight = Tensor::zeros(last.weight.shape());
        last.bias = Tensor::zeros(last.bias.shape());
    }
}

/// A match discriminator: encoder plus scoring head.
pub struct Discriminator {
    pub encoder: DiscEncoder,
    pub head: DiscHead,
}

impl Discriminator {
    pub fn new<R: Rng>(embedding_dim: usize, width_mult: f64, rng: &mut R) -> Discriminator {
        Discriminator {
            encoder: DiscEncoder::new(width_mult, rng),
            head: DiscHead::new(embedding_dim, rng),
        }
    }

    /// p(embedding matches image), in (0, 1).
    pub fn probability(&self, image: &Tensor, emb: &Tensor) -> Result<f64> {
        let (feat, _) = self.encoder.forward(image)?;
        let (logit, _) = self.head.forward(&feat, emb)?;
        Ok(sigmoid_scalar(logit))
    }

    pub fn named_params(&self, prefix: &str) -> Vec<(String, &Tensor)> {
        let mut out = self.encoder.named_params(&format!("{prefix}.encoder"));
        out.extend(self.head.named_params(&format!("{prefix}.head")));
        out
    }

    pub fn named_params_mut(&mut self, prefix: &str) -> Vec<(String, &mut Tensor)> {
        let mut out = self.encoder.named_params_mut(&format!("{prefix}.encoder"));
        out.extend(self.head.named_params_mut(&format!("{prefix}.head")));
        out
    }
}

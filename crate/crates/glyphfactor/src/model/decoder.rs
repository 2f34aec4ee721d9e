use rand::Rng;

use crate::nncore::{
    relu, relu_backward, sigmoid, sigmoid_backward, Conv2d, FullyConnected, GradStore, InstanceNorm,
    TConv2x2, Tensor,
};
use crate::Result;

/// Channel schedule for the decoder at a given width multiplier: 4x4 feature
/// maps start at scaled(1024) channels and halve at the first convolution of
/// each upsampling block.
pub fn decoder_channels(width_mult: f64) -> [usize; 5] {
    [1024, 512, 256, 128, 64].map(|base| scale_channels(base, width_mult))
}

pub fn scale_channels(base: usize, width_mult: f64) -> usize {
    ((base as f64 * width_mult).round() as usize).max(1)
}

struct DecoderBlock {
    tconv: TConv2x2,
    conv1: Conv2d,
    norm1: InstanceNorm,
    conv2: Conv2d,
    norm2: InstanceNorm,
}

/// Upsampling decoder: a dense layer to a 4x4 map, four blocks of
/// [tconv2x2 -> 2 x (conv3x3 -> instance norm -> relu)] doubling the spatial
/// size to 64x64, and a 1x1 projection through a sigmoid.
pub struct Decoder {
    input_dim: usize,
    channels: [usize; 5],
    fc: FullyConnected,
    blocks: Vec<DecoderBlock>,
    out_proj: Conv2d,
}

struct BlockCache {
    input: Tensor,
    tconv_out: Tensor,
    conv1_out: Tensor,
    norm1_out: Tensor,
    relu1_out: Tensor,
    conv2_out: Tensor,
    norm2_out: Tensor,
    relu2_out: Tensor,
}

pub struct DecoderCache {
    emb: Tensor,
    fc_out: Tensor,
    blocks: Vec<BlockCache>,
    proj_out: Tensor,
    output: Tensor,
}

impl DecoderCache {
    pub fn output(&self) -> &Tensor {
        &self.output
    }
}

impl Decoder {
    pub fn new<R: Rng>(input_dim: usize, width_mult: f64, rng: &mut R) -> Decoder {
        let channels = decoder_channels(width_mult);
        let fc = FullyConnected::new(input_dim, channels[0] * 4 * 4, rng);
        let blocks = (0..4)
            .map(|i| {
                let c_in = channels[i];
                let c_out = channels[i + 1];
                DecoderBlock {
                    tconv: TConv2x2::new(c_in, c_in, rng),
                    conv1: Conv2d::conv3x3(c_in, c_out, rng),
                    norm1: InstanceNorm::new(c_out),
                    conv2: Conv2d::conv3x3(c_out, c_out, rng),
                    norm2: InstanceNorm::new(c_out),
                }
            })
            .collect();
        let out_proj = Conv2d::conv1x1(channels[4], 1, rng);
        Decoder {
            input_dim,
            channels,
            fc,
            blocks,
            out_proj,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn channels(&self) -> &[usize; 5] {
        &self.channels
    }

    pub fn forward(&self, emb: &Tensor) -> Result<(Tensor, DecoderCache)> {
        let fc_out = self.fc.forward(emb)?;
        let mut x = fc_out.clone().reshape(&[self.channels[0], 4, 4])?;
        let mut blocks = Vec::with_capacity(4);
        for block in &self.blocks {
            let input = x;
            let tconv_out = block.tconv.forward(&input)?;
            let conv1_out = block.conv1.forward(&tconv_out)?;
            let norm1_out = block.norm1.forward(&conv1_out)?;
            let relu1_out = relu(&norm1_out);
            let conv2_out = block.conv2.forward(&relu1_out)?;
            let norm2_out = block.norm2.forward(&conv2_out)?;
            let relu2_out = relu(&norm2_out);
            x = relu2_out.clone();
            blocks.push(BlockCache {
                input,
                tconv_out,
                conv1_out,
                norm1_out,
                relu1_out,
                conv2_out,
                norm2_out,
                relu2_out,
            });
        }
        let proj_out = self.out_proj.forward(&x)?;
        let output = sigmoid(&proj_out);
        let cache = DecoderCache {
            emb: emb.clone(),
            fc_out,
            blocks,
            proj_out,
            output: output.clone(),
        };
        Ok((output, cache))
    }

    /// Backpropagate a gradient wrt the sigmoid output; returns the gradient
    /// wrt the embedding input and accumulates parameter gradients under
    /// `prefix` into `grads`.
    pub fn backward(
        &self,
        cache: &DecoderCache,
        grad_output: &Tensor,
        prefix: &str,
        grads: &mut GradStore,
    ) -> Result<Tensor> {
        let _ = cache.proj_out; // pre-sigmoid activations; grads flow via the output
        let mut g = sigmoid_backward(&cache.output, grad_output);
        let last_in = &cache.blocks[3].relu2_out;
        let (g_proj_in, proj_grads) = self.out_proj.backward(last_in, &g)?;
        grads.accumulate(&format!("{prefix}.out.weight"), proj_grads.weight);
        grads.accumulate(&format!("{prefix}.out.bias"), proj_grads.bias);
        g = g_proj_in;

        for (i, block) in self.blocks.iter().enumerate().rev() {
            let c = &cache.blocks[i];
            let g_norm2 = relu_backward(&c.norm2_out, &g);
            let (g_conv2, norm2_grads) = block.norm2.backward(&c.conv2_out, &g_norm2)?;
            grads.accumulate(&format!("{prefix}.block{i}.norm2.gain"), norm2_grads.gain);
            grads.accumulate(&format!("{prefix}.block{i}.norm2.shift"), norm2_grads.shift);
            let (g_relu1, conv2_grads) = block.conv2.backward(&c.relu1_out, &g_conv2)?;
            grads.accumulate(&format!("{prefix}.block{i}.conv2.weight"), conv2_grads.weight);
            grads.accumulate(&format!("{prefix}.block{i}.conv2.bias"), conv2_grads.bias);
            let g_norm1 = relu_backward(&c.norm1_out, &g_relu1);
            let (g_conv1, norm1_grads) = block.norm1.backward(&c.conv1_out, &g_norm1)?;
            grads.accumulate(&format!("{prefix}.block{i}.norm1.gain"), norm1_grads.gain);
            grads.accumulate(&format!("{prefix}.block{i}.norm1.shift"), norm1_grads.shift);
            let (g_tconv, conv1_grads) = block.conv1.backward(&c.tconv_out, &g_conv1)?;
            grads.accumulate(&format!("{prefix}.block{i}.conv1.weight"), conv1_grads.weight);
            grads.accumulate(&format!("{prefix}.block{i}.conv1.bias"), conv1_grads.bias);
            let (g_input, tconv_grads) = block.tconv.backward(&c.input, &g_tconv)?;
            grads.accumulate(&format!("{prefix}.block{i}.tconv.weight"), tconv_grads.weight);
            grads.accumulate(&format!("{prefix}.block{i}.tconv.bias"), tconv_grads.bias);
            g = g_input;
        }

        let g_flat = g.reshape(&[self.channels[0] * 16])?;
        let _ = &cache.fc_out;
        let (g_emb, fc_grads) = self.fc.backward(&cache.emb, &g_flat)?;
        grads.accumulate(&format!("{prefix}.fc.weight"), fc_grads.weight);
        grads.accumulate(&format!("{prefix}.fc.bias"), fc_grads.bias);
        Ok(g_emb)
    }

    pub fn named_params(&self, prefix: &str) -> Vec<(String, &Tensor)> {
        let mut out = vec![
            (format!("{prefix}.fc.weight"), &self.fc.weight),
            (format!("{prefix}.fc.bias"), &self.fc.bias),
        ];
        for (i, b) in self.blocks.iter().enumerate() {
            out.push((format!("{prefix}.block{i}.tconv.weight"), &b.tconv.weight));
            out.push((format!("{prefix}.block{i}.tconv.bias"), &b.tconv.bias));
            out.push((format!("{prefix}.block{i}.conv1.weight"), &b.conv1.weight));
            out.push((format!("{prefix}.block{i}.conv1.bias"), &b.conv1.bias));
            out.push((format!("{prefix}.block{i}.norm1.gain"), &b.norm1.gain));
            out.push((format!("{prefix}.block{i}.norm1.shift"), &b.norm1.shift));
            out.push((format!("{prefix}.block{i}.conv2.weight"), &b.conv2.weight));
            out.push((format!("{prefix}.block{i}.conv2.bias"), &b.conv2.bias));
            out.push((format!("{prefix}.block{i}.norm2.gain"), &b.norm2.gain));
            out.push((format!("{prefix}.block{i}.norm2.shift"), &b.norm2.shift));
        }
        out.push((format!("{prefix}.out.weight"), &self.out_proj.weight));
        out.push((format!("{prefix}.out.bias"), &self.out_proj.bias));
        out
    }

    pub fn named_params_mut(&mut self, prefix: &str) -> Vec<(String, &mut Tensor)> {
        let mut out = vec![
            (format!("{prefix}.fc.weight"), &mut self.fc.weight),
            (format!("{prefix}.fc.bias"), &mut self.fc.bias),
        ];
        for (i, b) in self.blocks.iter_mut().enumerate() {
            out.push((format!("{prefix}.block{i}.tconv.weight"), &mut b.tconv.weight));
            out.push((format!("{prefix}.block{i}.tconv.bias"), &mut b.tconv.bias));
            out.push((format!("{prefix}.block{i}.conv1.weight"), &mut b.conv1.weight));
            out.push((format!("{prefix}.block{i}.conv1.bias"), &mut b.conv1.bias));
            out.push((format!("{prefix}.block{i}.norm1.gain"), &mut b.norm1.gain));
            out.push((format!("{prefix}.block{i}.norm1.shift"), &mut b.norm1.shift));
            out.push((format!("{prefix}.block{i}.conv2.weight"), &mut b.conv2.weight));
            out.push((format!("{prefix}.block{i}.conv2.bias"), &mut b.conv2.bias));
            out.push((format!("{prefix}.block{i}.norm2.gain"), &mut b.norm2.gain));
            out.push((format!("{prefix}.block{i}.norm2.shift"), &mut b.norm2.shift));
        }
        out.push((format!("{prefix}.out.weight"), &mut self.out_proj.weight));
        out.push((format!("{prefix}.out.bias"), &mut self.out_proj.bias));
        out
    }
}

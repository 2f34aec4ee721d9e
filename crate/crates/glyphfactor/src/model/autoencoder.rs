use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::nncore::{checkpoint, AdamConfig, AdamState, GradStore, Tensor};
use crate::{GlyphError, Result};

use super::decoder::Decoder;
use super::discriminator::{DiscEncoder, ENCODER_FEATURE_DIM};
use super::loss::recon_mse;
use super::train::{EpochStats, TrainConfig, TrainExample, TrainLog};

/// Baseline model: one private embedding per image, produced by an encoder
/// with the discriminator's layout and decoded by the same decoder as the
/// factored model (input width 16 instead of 32). A scribe is represented by
/// the mean of its glyph embeddings.
pub struct Autoencoder {
    pub encoder: DiscEncoder,
    pub decoder: Decoder,
}

impl Autoencoder {
    pub fn init(width_mult: f64, seed: u64) -> Autoencoder {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Autoencoder {
            encoder: DiscEncoder::new(width_mult, &mut rng),
            decoder: Decoder::new(ENCODER_FEATURE_DIM, width_mult, &mut rng),
        }
    }

    /// The 16-dimensional embedding of one image.
    pub fn embed(&self, image: &Tensor) -> Result<Tensor> {
        Ok(self.encoder.forward(image)?.0)
    }

    pub fn reconstruct(&self, image: &Tensor) -> Result<Tensor> {
        let emb = self.embed(image)?;
        Ok(self.decoder.forward(&emb)?.0)
    }

    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        let mut out = self.encoder.named_params("encoder");
        out.extend(self.decoder.named_params("decoder"));
        out
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = self.encoder.named_params_mut("encoder");
        out.extend(self.decoder.named_params_mut("decoder"));
        out
    }

    pub fn save_checkpoint(&self, path: &std::path::Path) -> Result<()> {
        checkpoint::save(path, &self.named_params())
    }

    pub fn load_checkpoint(path: &std::path::Path, width_mult: f64) -> Result<Autoencoder> {
        let mut ae = Autoencoder::init(width_mult, 0);
        let stored = checkpoint::load(path)?;
        super::restore_params(&mut ae.named_params_mut(), &stored)?;
        Ok(ae)
    }
}

fn example_grads(ae: &Autoencoder, image: &Tensor) -> Result<(f64, GradStore)> {
    let mut grads = GradStore::new();
    let (emb, enc_cache) = ae.encoder.forward(image)?;
    let (xhat, dec_cache) = ae.decoder.forward(&emb)?;
    let mse = recon_mse(image, &xhat);
    let n = image.numel() as f64;
    let mut grad_out = xhat;
    for (g, x) in grad_out.data_mut().iter_mut().zip(image.data()) {
        *g = 2.0 * (*g - x) / n;
    }
    let g_emb = ae.decoder.backward(&dec_cache, &grad_out, "decoder", &mut grads)?;
    ae.encoder.backward(&enc_cache, &g_emb, "encoder", &mut grads)?;
    Ok((mse, grads))
}

/// MSE-only minibatch training of the autoencoder baseline. Uses the
/// learning rate, batch size, epoch count, width multiplier, and seed from
/// the config; the loss toggles and lambda weights do not apply.
pub fn train_autoencoder(examples: &[TrainExample], config: &TrainConfig) -> Result<(Autoencoder, TrainLog)> {
    if examples.is_empty() {
        return Err(GlyphError::Invalid("empty corpus".into()));
    }
    if config.batch_size == 0 {
        return Err(GlyphError::Config("batch_size must be positive".into()));
    }
    let mut ae = Autoencoder::init(config.width_mult, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut adam = AdamState::new(AdamConfig {
        alpha: config.learning_rate,
        ..AdamConfig::default()
    });
    let mut log = TrainLog {
        recon: true,
        sign_disc: false,
        scribe_disc: false,
        epochs: Vec::with_capacity(config.epochs),
    };
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 1..=config.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let mut mse_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let partials: Vec<Result<(f64, GradStore)>> = batch
                .par_iter()
                .map(|&i| example_grads(&ae, &examples[i].image))
                .collect();
            let mut grads = GradStore::new();
            for partial in partials {
                let (m, g) = partial?;
                mse_sum += m;
                grads.merge(g);
            }
            grads.scale(1.0 / batch.len() as f64);
            adam.step(&mut ae.named_params_mut(), &grads)?;
        }
        let mean = mse_sum / examples.len() as f64;
        log.epochs.push(EpochStats {
            epoch,
            recon_mse: Some(mean),
            sign_bce: None,
            scribe_bce: None,
            total: mean,
        });
    }
    Ok((ae, log))
}

/// Embeddings for every example, in corpus order (N x 16).
pub fn image_embeddings(ae: &Autoencoder, examples: &[TrainExample]) -> Result<Tensor> {
    let rows: Vec<Result<Tensor>> = examples.par_iter().map(|ex| ae.embed(&ex.image)).collect();
    let mut data = Vec::with_capacity(examples.len() * ENCODER_FEATURE_DIM);
    for row in rows {
        data.extend_from_slice(row?.data());
    }
    Tensor::from_vec(&[examples.len(), ENCODER_FEATURE_DIM], data)
}

/// Per-scribe representation: the mean embedding over that scribe's glyphs
/// (K x 16). Scribes with no glyphs are an error.
pub fn scribe_mean_embeddings(
    embeddings: &Tensor,
    examples: &[TrainExample],
    scribe_count: usize,
) -> Result<Tensor> {
    let (n, d) = embeddings.dims2()?;
    if n != examples.len() {
        return Err(GlyphError::shape(
            "scribe_mean_embeddings",
            format!("{} embedding rows", examples.len()),
            format!("{n}"),
        ));
    }
    let mut sums = vec![0.0; scribe_count * d];
    let mut counts = vec![0usize; scribe_count];
    for (i, ex) in examples.iter().enumerate() {
        counts[ex.scribe] += 1;
        let row = embeddings.row(i);
        for (s, v) in sums[ex.scribe * d..(ex.scribe + 1) * d].iter_mut().zip(row) {
            *s += v;
        }
    }
    for (k, &c) in counts.iter().enumerate() {
        if c == 0 {
            return Err(GlyphError::Invalid(format!("scribe {k} has no glyphs")));
        }
        for v in sums[k * d..(k + 1) * d].iter_mut() {
            *v /= c as f64;
        }
    }
    Tensor::from_vec(&[scribe_count, d], sums)
}

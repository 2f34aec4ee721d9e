//! The factored embedding model: shared sign/scribe embedding tables feeding
//! a reconstruction decoder and two match discriminators, trained jointly on
//! glyph images; plus the per-image autoencoder baseline.

pub mod autoencoder;
pub mod decoder;
pub mod discriminator;
pub mod export;
pub mod grid;
pub mod loss;
pub mod train;

pub use autoencoder::{train_autoencoder, Autoencoder};
pub use decoder::{decoder_channels, Decoder};
pub use discriminator::{encoder_channels, DiscEncoder, DiscHead, Discriminator};
pub use grid::reconstruct_grid;
pub use loss::{loss, LossBreakdown, LossConfig};
pub use train::{train, EpochStats, TrainConfig, TrainExample, TrainLog};

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::nncore::{checkpoint, init, Tensor};
use crate::{GlyphError, Result};

pub const DEFAULT_EMBEDDING_DIM: usize = 16;

/// Standard deviation of the Gaussian embedding-table init.
pub const EMBEDDING_INIT_STD: f64 = 0.01;

/// All trainable state of the factored model.
pub struct ModelParams {
    embedding_dim: usize,
    width_mult: f64,
    /// (J, d): row j is the shape embedding shared by every glyph of sign j.
    pub sign_table: Tensor,
    /// (K, d): row k is the style embedding shared by every glyph of scribe k.
    pub scribe_table: Tensor,
    pub decoder: Decoder,
    pub sign_disc: Discriminator,
    pub scribe_disc: Discriminator,
}

impl ModelParams {
    pub fn init(sign_count: usize, scribe_count: usize, embedding_dim: usize, width_mult: f64, seed: u64) -> ModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sign_table = init::normal(&mut rng, &[sign_count, embedding_dim], EMBEDDING_INIT_STD);
        let scribe_table = init::normal(&mut rng, &[scribe_count, embedding_dim], EMBEDDING_INIT_STD);
        let decoder = Decoder::new(2 * embedding_dim, width_mult, &mut rng);
        let sign_disc = Discriminator::new(embedding_dim, width_mult, &mut rng);
        let scribe_disc = Discriminator::new(embedding_dim, width_mult, &mut rng);
        ModelParams {
            embedding_dim,
            width_mult,
            sign_table,
            scribe_table,
            decoder,
            sign_disc,
            scribe_disc,
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn width_mult(&self) -> f64 {
        self.width_mult
    }

    pub fn sign_count(&self) -> usize {
        self.sign_table.shape()[0]
    }

    pub fn scribe_count(&self) -> usize {
        self.scribe_table.shape()[0]
    }

    pub fn check_sign(&self, sign: usize) -> Result<()> {
        if sign >= self.sign_count() {
            return Err(GlyphError::Invalid(format!(
                "sign id {sign} out of range (J = {})",
                self.sign_count()
            )));
        }
        Ok(())
    }

    pub fn check_scribe(&self, scribe: usize) -> Result<()> {
        if scribe >= self.scribe_count() {
            return Err(GlyphError::Invalid(format!(
                "scribe id {scribe} out of range (K = {})",
                self.scribe_count()
            )));
        }
        Ok(())
    }

    pub fn sign_embedding(&self, sign: usize) -> Result<Tensor> {
        self.check_sign(sign)?;
        Tensor::from_vec(&[self.embedding_dim], self.sign_table.row(sign).to_vec())
    }

    pub fn scribe_embedding(&self, scribe: usize) -> Result<Tensor> {
        self.check_scribe(scribe)?;
        Tensor::from_vec(&[self.embedding_dim], self.scribe_table.row(scribe).to_vec())
    }

    /// The current (J, d) sign table, rows ordered by dense id.
    pub fn sign_embeddings(&self) -> &Tensor {
        &self.sign_table
    }

    /// The current (K, d) scribe table, rows ordered by dense id.
    pub fn scribe_embeddings(&self) -> &Tensor {
        &self.scribe_table
    }

    /// Concatenated decoder input [Y_j ; Z_k].
    pub fn decoder_input(&self, sign: usize, scribe: usize) -> Result<Tensor> {
        self.check_sign(sign)?;
        self.check_scribe(scribe)?;
        let mut data = Vec::with_capacity(2 * self.embedding_dim);
        data.extend_from_slice(self.sign_table.row(sign));
        data.extend_from_slice(self.scribe_table.row(scribe));
        Tensor::from_vec(&[2 * self.embedding_dim], data)
    }

    /// Render the glyph for (sign, scribe) from the embeddings alone.
    pub fn decode(&self, sign: usize, scribe: usize) -> Result<Tensor> {
        let emb = self.decoder_input(sign, scribe)?;
        Ok(self.decoder.forward(&emb)?.0)
    }

    /// p(scribe k wrote this image).
    pub fn discriminate_scribe(&self, image: &Tensor, scribe: usize) -> Result<f64> {
        let emb = self.scribe_embedding(scribe)?;
        self.scribe_disc.probability(image, &emb)
    }

    /// p(this image depicts sign j).
    pub fn discriminate_sign(&self, image: &Tensor, sign: usize) -> Result<f64> {
        let emb = self.sign_embedding(sign)?;
        self.sign_disc.probability(image, &emb)
    }

    pub const SIGN_TABLE_PATH: &'static str = "sign_embeddings.table";
    pub const SCRIBE_TABLE_PATH: &'static str = "scribe_embeddings.table";

    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![
            (Self::SIGN_TABLE_PATH.to_string(), &self.sign_table),
            (Self::SCRIBE_TABLE_PATH.to_string(), &self.scribe_table),
        ];
        out.extend(self.decoder.named_params("decoder"));
        out.extend(self.sign_disc.named_params("sign_disc"));
        out.extend(self.scribe_disc.named_params("scribe_disc"));
        out
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = vec![
            (Self::SIGN_TABLE_PATH.to_string(), &mut self.sign_table),
            (Self::SCRIBE_TABLE_PATH.to_string(), &mut self.scribe_table),
        ];
        out.extend(self.decoder.named_params_mut("decoder"));
        out.extend(self.sign_disc.named_params_mut("sign_disc"));
        out.extend(self.scribe_disc.named_params_mut("scribe_disc"));
        out
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        checkpoint::save(path, &self.named_params())
    }

    /// Rebuild a model of the given dimensions from a checkpoint file.
    pub fn load_checkpoint(
        path: &Path,
        sign_count: usize,
        scribe_count: usize,
        embedding_dim: usize,
        width_mult: f64,
    ) -> Result<ModelParams> {
        let mut model = ModelParams::init(sign_count, scribe_count, embedding_dim, width_mult, 0);
        let stored = checkpoint::load(path)?;
        restore_params(&mut model.named_params_mut(), &stored)?;
        Ok(model)
    }
}

/// Copy stored tensors into live parameters by path, requiring exact
/// one-to-one coverage and matching shapes.
pub(crate) fn restore_params(
    params: &mut [(String, &mut Tensor)],
    stored: &BTreeMap<String, Tensor>,
) -> Result<()> {
    if params.len() != stored.len() {
        return Err(GlyphError::Checkpoint(format!(
            "checkpoint has {} tensors, model expects {}",
            stored.len(),
            params.len()
        )));
    }
    for (path, tensor) in params.iter_mut() {
        let loaded = stored
            .get(path)
            .ok_or_else(|| GlyphError::Checkpoint(format!("missing parameter {path}")))?;
        if loaded.shape() != tensor.shape() {
            return Err(GlyphError::shape(
                format!("checkpoint parameter {path}"),
                format!("{:?}", tensor.shape()),
                format!("{:?}", loaded.shape()),
            ));
        }
        **tensor = loaded.clone();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_tables_have_dense_row_per_id() {
        let m = ModelParams::init(5, 3, 16, 1.0 / 64.0, 7);
        assert_eq!(m.sign_embeddings().shape(), &[5, 16]);
        assert_eq!(m.scribe_embeddings().shape(), &[3, 16]);
        assert!(m.sign_table.all_finite());
        // init contract: zero-mean, std 0.01 Gaussian rows
        let max = m.sign_table.data().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(max < 0.1, "embedding init too large: {max}");
    }

    #[test]
    fn decode_produces_glyph_shaped_output() {
        let m = ModelParams::init(2, 2, 8, 1.0 / 64.0, 1);
        let out = m.decode(1, 0).unwrap();
        assert_eq!(out.shape(), &[1, 64, 64]);
        assert!(out.all_finite());
        assert!(out.data().iter().all(|&v| v > 0.0 && v < 1.0));
        // determinism
        assert_eq!(m.decode(1, 0).unwrap(), out);
    }

    #[test]
    fn out_of_range_ids_rejected() {
        let m = ModelParams::init(2, 2, 8, 1.0 / 64.0, 1);
        assert!(m.decode(2, 0).is_err());
        assert!(m.decode(0, 5).is_err());
    }

    #[test]
    fn checkpoint_round_trip_restores_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let m = ModelParams::init(2, 3, 8, 1.0 / 64.0, 99);
        m.save_checkpoint(&path).unwrap();
        let loaded = ModelParams::load_checkpoint(&path, 2, 3, 8, 1.0 / 64.0).unwrap();
        for ((pa, ta), (pb, tb)) in m.named_params().iter().zip(loaded.named_params().iter()) {
            assert_eq!(pa, pb);
            assert_eq!(ta.shape(), tb.shape());
            for (x, y) in ta.data().iter().zip(tb.data()) {
                assert_eq!(x.to_bits(), y.to_bits(), "parameter {pa}");
            }
        }
    }

    #[test]
    fn checkpoint_wrong_dims_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        ModelParams::init(2, 3, 8, 1.0 / 64.0, 0).save_checkpoint(&path).unwrap();
        assert!(ModelParams::load_checkpoint(&path, 2, 3, 16, 1.0 / 64.0).is_err());
    }
}

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::nncore::{AdamConfig, AdamState, GradStore, Tensor};
use crate::{GlyphError, Result};

use super::loss::{example_grads, LossBreakdown, LossConfig};
use super::{ModelParams, DEFAULT_EMBEDDING_DIM};

/// One training datapoint: a glyph image with its dense label ids.
#[derive(Clone)]
pub struct TrainExample {
    pub image: Tensor,
    pub sign: usize,
    pub scribe: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub embedding_dim: usize,
    pub lambda_sign: f64,
    pub lambda_scribe: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub recon: bool,
    pub sign_disc: bool,
    pub scribe_disc: bool,
    pub width_mult: f64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            lambda_sign: 1.0,
            lambda_scribe: 1.0,
            learning_rate: 1e-4,
            batch_size: 25,
            epochs: 100,
            seed: 0,
            recon: true,
            sign_disc: true,
            scribe_disc: true,
            width_mult: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            lambda_sign: self.lambda_sign,
            lambda_scribe: self.lambda_scribe,
            recon: self.recon,
            sign_disc: self.sign_disc,
            scribe_disc: self.scribe_disc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.loss_config().validate()?;
        if self.embedding_dim == 0 {
            return Err(GlyphError::Config("embedding_dim must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(GlyphError::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(GlyphError::Config("learning_rate must be positive".into()));
        }
        if !(self.width_mult > 0.0) {
            return Err(GlyphError::Config("width_mult must be positive".into()));
        }
        Ok(())
    }
}

/// Per-epoch means of the loss components; disabled components are None.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub recon_mse: Option<f64>,
    pub sign_bce: Option<f64>,
    pub scribe_bce: Option<f64>,
    pub total: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub recon: bool,
    pub sign_disc: bool,
    pub scribe_disc: bool,
    pub epochs: Vec<EpochStats>,
}

impl TrainLog {
    /// CSV with one row per epoch; columns for disabled loss terms are absent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch");
        if self.recon {
            out.push_str(",recon_mse");
        }
        if self.sign_disc {
            out.push_str(",sign_bce");
        }
        if self.scribe_disc {
            out.push_str(",scribe_bce");
        }
        out.push_str(",total\n");
        for row in &self.epochs {
            out.push_str(&row.epoch.to_string());
            if self.recon {
                out.push_str(&format!(",{}", row.recon_mse.unwrap_or(0.0)));
            }
            if self.sign_disc {
                out.push_str(&format!(",{}", row.sign_bce.unwrap_or(0.0)));
            }
            if self.scribe_disc {
                out.push_str(&format!(",{}", row.scribe_bce.unwrap_or(0.0)));
            }
            out.push_str(&format!(",{}\n", row.total));
        }
        out
    }
}

fn validate_corpus(examples: &[TrainExample], sign_count: usize, scribe_count: usize, config: &TrainConfig) -> Result<()> {
    if examples.is_empty() {
        return Err(GlyphError::Invalid("empty corpus".into()));
    }
    if config.sign_disc && sign_count < 2 {
        return Err(GlyphError::Invalid(
            "sign discriminator requires at least 2 signs (J >= 2)".into(),
        ));
    }
    if config.scribe_disc && scribe_count < 2 {
        return Err(GlyphError::Invalid(
            "scribe discriminator requires at least 2 scribes (K >= 2)".into(),
        ));
    }
    for (i, ex) in examples.iter().enumerate() {
        if ex.sign >= sign_count || ex.scribe >= scribe_count {
            return Err(GlyphError::Invalid(format!(
                "example {i} has ids (sign {}, scribe {}) outside (J = {sign_count}, K = {scribe_count})",
                ex.sign, ex.scribe
            )));
        }
    }
    Ok(())
}

/// Draw uniformly from [0, n) \ {exclude}.
fn sample_negative<R: Rng>(rng: &mut R, n: usize, exclude: usize) -> usize {
    let draw = rng.gen_range(0..n - 1);
    if draw >= exclude {
        draw + 1
    } else {
        draw
    }
}

/// Mean gradients and summed loss components over one minibatch.
///
/// Per-example work runs in parallel; results merge in example order, so
/// accumulation is bit-deterministic regardless of thread scheduling.
fn batch_grads(
    model: &ModelParams,
    items: &[(usize, usize, usize)], // (example index, neg_sign, neg_scribe)
    examples: &[TrainExample],
    cfg: &LossConfig,
) -> Result<(Vec<LossBreakdown>, GradStore)> {
    let partials: Vec<Result<(LossBreakdown, GradStore)>> = items
        .par_iter()
        .map(|&(idx, neg_sign, neg_scribe)| {
            let ex = &examples[idx];
            example_grads(model, &ex.image, ex.sign, ex.scribe, neg_sign, neg_scribe, cfg)
        })
        .collect();

    let mut grads = GradStore::new();
    let mut breakdowns = Vec::with_capacity(items.len());
    for partial in partials {
        let (b, g) = partial?;
        breakdowns.push(b);
        grads.merge(g);
    }
    grads.scale(1.0 / items.len() as f64);
    Ok((breakdowns, grads))
}

/// Minibatch Adam training of the factored model. Deterministic given the
/// seed: example shuffling, negative sampling, and parameter init all derive
/// from it, and gradient accumulation order is fixed.
pub fn train(
    examples: &[TrainExample],
    sign_count: usize,
    scribe_count: usize,
    config: &TrainConfig,
) -> Result<(ModelParams, TrainLog)> {
    config.validate()?;
    validate_corpus(examples, sign_count, scribe_count, config)?;

    let mut model = ModelParams::init(
        sign_count,
        scribe_count,
        config.embedding_dim,
        config.width_mult,
        config.seed,
    );
    let log = train_in_place(&mut model, examples, config)?;
    Ok((model, log))
}

pub(crate) fn train_in_place(
    model: &mut ModelParams,
    examples: &[TrainExample],
    config: &TrainConfig,
) -> Result<TrainLog> {
    let cfg = config.loss_config();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut adam = AdamState::new(AdamConfig {
        alpha: config.learning_rate,
        ..AdamConfig::default()
    });
    let mut log = TrainLog {
        recon: config.recon,
        sign_disc: config.sign_disc,
        scribe_disc: config.scribe_disc,
        epochs: Vec::with_capacity(config.epochs),
    };

    let sign_count = model.sign_count();
    let scribe_count = model.scribe_count();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut sums = LossBreakdown::default();
        for batch in order.chunks(config.batch_size) {
            let items: Vec<(usize, usize, usize)> = batch
                .iter()
                .map(|&idx| {
                    let ex = &examples[idx];
                    let neg_sign = if config.sign_disc {
                        sample_negative(&mut rng, sign_count, ex.sign)
                    } else {
                        usize::MAX
                    };
                    let neg_scribe = if config.scribe_disc {
                        sample_negative(&mut rng, scribe_count, ex.scribe)
                    } else {
                        usize::MAX
                    };
                    (idx, neg_sign, neg_scribe)
                })
                .collect();
            let (breakdowns, grads) = batch_grads(model, &items, examples, &cfg)?;
            for b in &breakdowns {
                sums.recon_mse += b.recon_mse;
                sums.sign_bce += b.sign_bce;
                sums.scribe_bce += b.scribe_bce;
                sums.total += b.total;
            }
            adam.step(&mut model.named_params_mut(), &grads)?;
        }
        let n = examples.len() as f64;
        log.epochs.push(EpochStats {
            epoch,
            recon_mse: config.recon.then_some(sums.recon_mse / n),
            sign_bce: config.sign_disc.then_some(sums.sign_bce / n),
            scribe_bce: config.scribe_disc.then_some(sums.scribe_bce / n),
            total: sums.total / n,
        });
    }
    Ok(log)
}

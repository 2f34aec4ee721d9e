use crate::nncore::{sigmoid_scalar, softplus, GradStore, Tensor};
use crate::{GlyphError, Result};

use super::ModelParams;

/// Loss weighting and term toggles. Disabled terms contribute 0 and their
/// parameters receive no gradient.
#[derive(Clone, Copy, Debug)]
pub struct LossConfig {
    pub lambda_sign: f64,
    pub lambda_scribe: f64,
    pub recon: bool,
    pub sign_disc: bool,
    pub scribe_disc: bool,
}

impl Default for LossConfig {
    fn default() -> LossConfig {
        LossConfig {
            lambda_sign: 1.0,
            lambda_scribe: 1.0,
            recon: true,
            sign_disc: true,
            scribe_disc: true,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.recon || self.sign_disc || self.scribe_disc) {
            return Err(GlyphError::Config("at least one loss term must be enabled".into()));
        }
        if self.lambda_sign < 0.0 || self.lambda_scribe < 0.0 {
            return Err(GlyphError::Config("loss weights must be non-negative".into()));
        }
        Ok(())
    }
}

/// Per-example loss components. `recon_mse`, `sign_bce`, and `scribe_bce` are
/// the raw terms; `total` applies the lambda weights.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub recon_mse: f64,
    pub sign_bce: f64,
    pub scribe_bce: f64,
    pub total: f64,
}

impl LossBreakdown {
    fn finish(mut self, cfg: &LossConfig) -> LossBreakdown {
        self.total = self.recon_mse + cfg.lambda_sign * self.sign_bce + cfg.lambda_scribe * self.scribe_bce;
        self
    }
}

/// Mean squared pixel error between a glyph and its reconstruction.
pub fn recon_mse(x: &Tensor, xhat: &Tensor) -> f64 {
    debug_assert_eq!(x.shape(), xhat.shape());
    let n = x.numel() as f64;
    x.data()
        .iter()
        .zip(xhat.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n
}

/// Binary cross-entropy for one positive and one negative logit:
/// -log sigmoid(z_pos) - log(1 - sigmoid(z_neg)).
fn bce_pair(z_pos: f64, z_neg: f64) -> f64 {
    softplus(-z_pos) + softplus(z_neg)
}

fn validate_pairs(
    model: &ModelParams,
    sign: usize,
    scribe: usize,
    neg_sign: usize,
    neg_scribe: usize,
    cfg: &LossConfig,
) -> Result<()> {
    cfg.validate()?;
    model.check_sign(sign)?;
    model.check_scribe(scribe)?;
    if cfg.sign_disc {
        model.check_sign(neg_sign)?;
        if neg_sign == sign {
            return Err(GlyphError::Invalid(format!(
                "negative sign sample must differ from the true sign ({sign})"
            )));
        }
    }
    if cfg.scribe_disc {
        model.check_scribe(neg_scribe)?;
        if neg_scribe == scribe {
            return Err(GlyphError::Invalid(format!(
                "negative scribe sample must differ from the true scribe ({scribe})"
            )));
        }
    }
    Ok(())
}

/// Forward-only loss evaluation:
/// L = MSE(X, X_hat) + lambda_sign * BCE_sign + lambda_scribe * BCE_scribe.
pub fn loss(
    model: &ModelParams,
    image: &Tensor,
    sign: usize,
    scribe: usize,
    neg_sign: usize,
    neg_scribe: usize,
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    validate_pairs(model, sign, scribe, neg_sign, neg_scribe, cfg)?;
    let mut breakdown = LossBreakdown::default();

    if cfg.recon {
        let xhat = model.decode(sign, scribe)?;
        breakdown.recon_mse = recon_mse(image, &xhat);
    }
    if cfg.sign_disc {
        let (feat, _) = model.sign_disc.encoder.forward(image)?;
        let (z_pos, _) = model.sign_disc.head.forward(&feat, &model.sign_embedding(sign)?)?;
        let (z_neg, _) = model.sign_disc.head.forward(&feat, &model.sign_embedding(neg_sign)?)?;
        breakdown.sign_bce = bce_pair(z_pos, z_neg);
    }
    if cfg.scribe_disc {
        let (feat, _) = model.scribe_disc.encoder.forward(image)?;
        let (z_pos, _) = model.scribe_disc.head.forward(&feat, &model.scribe_embedding(scribe)?)?;
        let (z_neg, _) = model
            .scribe_disc
            .head
            .forward(&feat, &model.scribe_embedding(neg_scribe)?)?;
        breakdown.scribe_bce = bce_pair(z_pos, z_neg);
    }
    Ok(breakdown.finish(cfg))
}

/// Forward + backward for one example. Returns the loss components and the
/// gradients of the weighted total wrt every parameter that participates,
/// including the embedding-table rows touched by this example.
pub fn example_grads(
    model: &ModelParams,
    image: &Tensor,
    sign: usize,
    scribe: usize,
    neg_sign: usize,
    neg_scribe: usize,
    cfg: &LossConfig,
) -> Result<(LossBreakdown, GradStore)> {
    validate_pairs(model, sign, scribe, neg_sign, neg_scribe, cfg)?;
    let d = model.embedding_dim();
    let mut breakdown = LossBreakdown::default();
    let mut grads = GradStore::new();
    let mut sign_table_grad: Option<Tensor> = None;
    let mut scribe_table_grad: Option<Tensor> = None;

    let add_sign_row = |table_grad: &mut Option<Tensor>, row: usize, g: &[f64], shape: &[usize]| {
        let t = table_grad.get_or_insert_with(|| Tensor::zeros(shape));
        let dst = t.row_mut(row);
        for (d, s) in dst.iter_mut().zip(g) {
            *d += s;
        }
    };

    if cfg.recon {
        let emb = model.decoder_input(sign, scribe)?;
        let (xhat, cache) = model.decoder.forward(&emb)?;
        breakdown.recon_mse = recon_mse(image, &xhat);
        // d(mse)/d(xhat) = 2 (xhat - x) / n
        let n = image.numel() as f64;
        let mut grad_out = xhat.clone();
        for (g, x) in grad_out.data_mut().iter_mut().zip(image.data()) {
            *g = 2.0 * (*g - x) / n;
        }
        let g_emb = model.decoder.backward(&cache, &grad_out, "decoder", &mut grads)?;
        add_sign_row(&mut sign_table_grad, sign, &g_emb.data()[..d], model.sign_table.shape());
        add_sign_row(&mut scribe_table_grad, scribe, &g_emb.data()[d..], model.scribe_table.shape());
    }

    if cfg.sign_disc {
        let (feat, enc_cache) = model.sign_disc.encoder.forward(image)?;
        let emb_pos = model.sign_embedding(sign)?;
        let emb_neg = model.sign_embedding(neg_sign)?;
        let (z_pos, cache_pos) = model.sign_disc.head.forward(&feat, &emb_pos)?;
        let (z_neg, cache_neg) = model.sign_disc.head.forward(&feat, &emb_neg)?;
        breakdown.sign_bce = bce_pair(z_pos, z_neg);
        // d/dz of softplus(-z) is sigmoid(z) - 1; of softplus(z) is sigmoid(z)
        let g_pos = cfg.lambda_sign * (sigmoid_scalar(z_pos) - 1.0);
        let g_neg = cfg.lambda_sign * sigmoid_scalar(z_neg);
        let (gf_pos, ge_pos) = model.sign_disc.head.backward(&cache_pos, g_pos, "sign_disc.head", &mut grads)?;
        let (gf_neg, ge_neg) = model.sign_disc.head.backward(&cache_neg, g_neg, "sign_disc.head", &mut grads)?;
        let mut g_feat = gf_pos;
        g_feat.add_scaled(&gf_neg, 1.0);
        model
            .sign_disc
            .encoder
            .backward(&enc_cache, &g_feat, "sign_disc.encoder", &mut grads)?;
        add_sign_row(&mut sign_table_grad, sign, ge_pos.data(), model.sign_table.shape());
        add_sign_row(&mut sign_table_grad, neg_sign, ge_neg.data(), model.sign_table.shape());
    }

    if cfg.scribe_disc {
        let (feat, enc_cache) = model.scribe_disc.encoder.forward(image)?;
        let emb_pos = model.scribe_embedding(scribe)?;
        let emb_neg = model.scribe_embedding(neg_scribe)?;
        let (z_pos, cache_pos) = model.scribe_disc.head.forward(&feat, &emb_pos)?;
        let (z_neg, cache_neg) = model.scribe_disc.head.forward(&feat, &emb_neg)?;
        breakdown.scribe_bce = bce_pair(z_pos, z_neg);
        let g_pos = cfg.lambda_scribe * (sigmoid_scalar(z_pos) - 1.0);
        let g_neg = cfg.lambda_scribe * sigmoid_scalar(z_neg);
        let (gf_pos, ge_pos) = model
            .scribe_disc
            .head
            .backward(&cache_pos, g_pos, "scribe_disc.head", &mut grads)?;
        let (gf_neg, ge_neg) = model
            .scribe_disc
            .head
            .backward(&cache_neg, g_neg, "scribe_disc.head", &mut grads)?;
        let mut g_feat = gf_pos;
        g_feat.add_scaled(&gf_neg, 1.0);
        model
            .scribe_disc
            .encoder
            .backward(&enc_cache, &g_feat, "scribe_disc.encoder", &mut grads)?;
        add_sign_row(&mut scribe_table_grad, scribe, ge_pos.data(), model.scribe_table.shape());
        add_sign_row(&mut scribe_table_grad, neg_scribe, ge_neg.data(), model.scribe_table.shape());
    }

    if let Some(t) = sign_table_grad {
        grads.accumulate(ModelParams::SIGN_TABLE_PATH, t);
    }
    if let Some(t) = scribe_table_grad {
        grads.accumulate(ModelParams::SCRIBE_TABLE_PATH, t);
    }
    Ok((breakdown.finish(cfg), grads))
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::TrainConfig;
use crate::synth::SynthSpec;
use crate::{GlyphError, Result};

/// Declarative run configuration, one optional section per subcommand.
/// Unknown keys anywhere are rejected.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Default seed for every subcommand; `--seed` overrides.
    pub seed: u64,
    /// Default output directory; `--out` overrides.
    pub out: Option<PathBuf>,
    pub ingest: IngestConfig,
    pub augment: AugmentConfig,
    pub synth: SynthSpec,
    pub train: TrainSection,
    pub embed: EmbedConfig,
    pub reconstruct: ReconstructConfig,
    pub eval_probe: EvalProbeConfig,
    pub eval_qvec: EvalQvecConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| GlyphError::io(path, e))?;
        toml::from_str(&text).map_err(|e| GlyphError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct IngestConfig {
    /// Manifest CSV of the raw corpus.
    pub manifest: Option<PathBuf>,
    /// Whether ink is the dark class in the source images.
    pub ink_is_dark: IngestInk,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct IngestInk(pub bool);

impl Default for IngestInk {
    fn default() -> IngestInk {
        IngestInk(true)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentConfig {
    /// Directory holding a preprocessed corpus (manifest.csv + PGMs).
    pub corpus: Option<PathBuf>,
}

/// Kind of model a training run produces.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Factored,
    Autoencoder,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Factored => "factored",
            ModelKind::Autoencoder => "autoencoder",
        }
    }

    pub fn parse(s: &str) -> Result<ModelKind> {
        match s {
            "factored" => Ok(ModelKind::Factored),
            "autoencoder" => Ok(ModelKind::Autoencoder),
            other => Err(GlyphError::Config(format!(
                "unknown model kind {other:?} (expected factored or autoencoder)"
            ))),
        }
    }
}

/// The `[train]` section: corpus location, model kind, and every training
/// hyperparameter (mirroring the trainer's config so unknown keys can be
/// rejected).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    /// Directory holding the training corpus (manifest.csv + PGMs).
    pub corpus: Option<PathBuf>,
    pub model: ModelKind,
    pub embedding_dim: usize,
    pub lambda_sign: f64,
    pub lambda_scribe: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub recon: bool,
    pub sign_disc: bool,
    pub scribe_disc: bool,
    pub width_mult: f64,
}

impl Default for TrainSection {
    fn default() -> TrainSection {
        let c = TrainConfig::default();
        TrainSection {
            corpus: None,
            model: ModelKind::default(),
            embedding_dim: c.embedding_dim,
            lambda_sign: c.lambda_sign,
            lambda_scribe: c.lambda_scribe,
            learning_rate: c.learning_rate,
            batch_size: c.batch_size,
            epochs: c.epochs,
            recon: c.recon,
            sign_disc: c.sign_disc,
            scribe_disc: c.scribe_disc,
            width_mult: c.width_mult,
        }
    }
}

impl TrainSection {
    /// Assemble the trainer config, stamping in the run seed.
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            embedding_dim: self.embedding_dim,
            lambda_sign: self.lambda_sign,
            lambda_scribe: self.lambda_scribe,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
            recon: self.recon,
            sign_disc: self.sign_disc,
            scribe_disc: self.scribe_disc,
            width_mult: self.width_mult,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedConfig {
    /// Directory produced by `train` (model.ckpt + model_meta.toml).
    pub checkpoint: Option<PathBuf>,
    /// Corpus directory; required for autoencoder checkpoints, whose scribe
    /// embeddings are means over glyph embeddings.
    pub corpus: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructConfig {
    pub checkpoint: Option<PathBuf>,
    /// Scribe labels for the grid rows; empty means all scribes.
    pub scribes: Vec<String>,
    /// Sign labels for the grid columns; empty means all signs.
    pub signs: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EvalProbeConfig {
    /// Scribe embedding CSV (id,label,dim_0,...).
    pub embeddings: Option<PathBuf>,
    /// `scribe,findplace` metadata CSV.
    pub findplaces: Option<PathBuf>,
    /// Alternative metadata source: a corpus manifest with findplace column.
    pub manifest: Option<PathBuf>,
    pub folds: Folds,
    pub inits: Inits,
    /// Model name used in the report table.
    pub model_name: ModelName,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct Folds(pub usize);

impl Default for Folds {
    fn default() -> Folds {
        Folds(crate::eval::probe::DEFAULT_FOLDS)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct Inits(pub usize);

impl Default for Inits {
    fn default() -> Inits {
        Inits(crate::eval::probe::DEFAULT_INITS)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct ModelName(pub String);

impl Default for ModelName {
    fn default() -> ModelName {
        ModelName("model".to_string())
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EvalQvecConfig {
    pub embeddings: Option<PathBuf>,
    /// Manual feature CSV (scribe,<feature names>).
    pub manual: Option<PathBuf>,
    pub model_name: ModelName,
}

pub fn require<T: Clone>(value: &Option<T>, key: &str) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| GlyphError::Config(format!("missing required setting {key} (config key or flag)")))
}

//! Command-line pipeline: ingest, augment, synth, train, embed, reconstruct,
//! and the two evaluation commands, all driven by a TOML config with flag
//! overrides. Every run writes a provenance sidecar (config echo, seed, and
//! input hashes) next to its outputs, and outputs are deterministic given the
//! config, so re-runs produce identical bytes.

pub mod config;

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::augment::{augment_all, AugmentationSpec};
use crate::corpus::{
    corpus_hash, corpus_stats, load_manifest, preprocess, read_gray_image, write_glyph_pgm,
    CorpusManifest, CorpusRecord,
};
use crate::eval::io::{attach_findplaces, read_embeddings_csv, read_findplaces_csv, read_manual_features_csv};
use crate::eval::report::{emit_report, ReportFragment, ReportHeader};
use crate::eval::{baseline_most_common, filter_findplaces, probe_findplace, qvec};
use crate::model::export::{embeddings_to_csv, ModelMeta};
use crate::model::{
    autoencoder, reconstruct_grid, train, train_autoencoder, Autoencoder, ModelParams, TrainExample,
};
use crate::synth::generate;
use crate::{GlyphError, Result};

pub use config::{ModelKind, RunConfig};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const META_FILE: &str = "model_meta.toml";
pub const TRAINING_LOG_FILE: &str = "training_log.csv";
pub const PROVENANCE_FILE: &str = "provenance.toml";
pub const REPORT_FILE: &str = "report.txt";
pub const SCRIBE_EMBEDDINGS_FILE: &str = "scribe_embeddings.csv";
pub const SIGN_EMBEDDINGS_FILE: &str = "sign_embeddings.csv";
pub const IMAGE_EMBEDDINGS_FILE: &str = "image_embeddings.csv";
pub const GRID_FILE: &str = "grid.pgm";

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| GlyphError::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| GlyphError::io(path, e))
}

/// Write the provenance sidecar: subcommand, seed, echoed config section, and
/// content hashes of the inputs. Contains nothing volatile, so re-runs emit
/// identical bytes.
fn write_provenance(
    out_dir: &Path,
    subcommand: &str,
    seed: u64,
    config_echo: &str,
    inputs: &[(String, String)],
) -> Result<()> {
    let mut text = String::new();
    text.push_str(&format!("subcommand = {subcommand:?}\n"));
    text.push_str(&format!("seed = {seed}\n"));
    text.push_str("\n[inputs]\n");
    for (name, hash) in inputs {
        text.push_str(&format!("{name:?} = {hash:?}\n"));
    }
    text.push_str("\n[config]\n");
    text.push_str(config_echo);
    let path = out_dir.join(PROVENANCE_FILE);
    std::fs::write(&path, text).map_err(|e| GlyphError::io(&path, e))
}

fn config_echo<T: serde::Serialize>(section: &T) -> Result<String> {
    toml::to_string(section).map_err(|e| GlyphError::Config(format!("serializing config: {e}")))
}

fn safe_file_stem(glyph_id: &str, row: usize) -> Result<()> {
    let ok = !glyph_id.is_empty()
        && glyph_id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
        && !glyph_id.contains("..");
    if ok {
        Ok(())
    } else {
        Err(GlyphError::Manifest {
            row,
            message: format!("glyph_id {glyph_id:?} is not usable as a file name"),
        })
    }
}

/// Preprocess every record of a raw manifest into 64x64 binary PGMs plus a
/// normalized manifest; prints corpus statistics.
pub fn run_ingest(cfg: &RunConfig, out_dir: &Path, quiet: bool) -> Result<()> {
    let manifest_path = config::require(&cfg.ingest.manifest, "ingest.manifest")?;
    let manifest = load_manifest(&manifest_path)?;
    if manifest.records.is_empty() {
        return Err(GlyphError::Invalid("empty corpus".into()));
    }
    ensure_dir(out_dir)?;
    let ink_is_dark = cfg.ingest.ink_is_dark.0;

    let mut new_records = Vec::with_capacity(manifest.records.len());
    for (i, record) in manifest.records.iter().enumerate() {
        let row = i + 1;
        safe_file_stem(&record.glyph_id, row)?;
        let raw = read_gray_image(&manifest.image_abs_path(record))
            .map_err(|e| GlyphError::Manifest { row, message: e.to_string() })?;
        let glyph = preprocess(&raw, ink_is_dark)
            .map_err(|e| GlyphError::Manifest { row, message: e.to_string() })?;
        let file_name = format!("{}.pgm", record.glyph_id);
        write_glyph_pgm(&out_dir.join(&file_name), &glyph)?;
        new_records.push(CorpusRecord {
            image_path: PathBuf::from(file_name),
            ..record.clone()
        });
    }
    let new_manifest = CorpusManifest {
        records: new_records,
        sign_labels: manifest.sign_labels.clone(),
        scribe_labels: manifest.scribe_labels.clone(),
        base_dir: out_dir.to_path_buf(),
        source: manifest.source.clone(),
    };
    crate::corpus::write_manifest(&new_manifest, &out_dir.join("manifest.csv"))?;

    let stats = corpus_stats(&new_manifest)?;
    if !quiet {
        println!("{stats}");
    }
    write_provenance(
        out_dir,
        "ingest",
        cfg.seed,
        &config_echo(&cfg.ingest)?,
        &[(manifest_path.display().to_string(), sha256_file(&manifest_path)?)],
    )
}

/// Expand a preprocessed corpus 27x; the augmented manifest keeps the ingest
/// schema and the variant tag in each glyph id.
pub fn run_augment(cfg: &RunConfig, out_dir: &Path, quiet: bool) -> Result<()> {
    let corpus_dir = config::require(&cfg.augment.corpus, "augment.corpus")?;
    let manifest = load_manifest(&corpus_dir.join("manifest.csv"))?;
    if manifest.records.is_empty() {
        return Err(GlyphError::Invalid("empty corpus".into()));
    }
    ensure_dir(out_dir)?;
    let glyphs = manifest.load_glyphs()?;
    let specs = AugmentationSpec::all();

    let mut new_records = Vec::with_capacity(manifest.records.len() * specs.len());
    for (record, glyph) in manifest.records.iter().zip(&glyphs) {
        let variants = augment_all(glyph);
        for (spec, variant) in specs.iter().zip(variants) {
            let glyph_id = format!("{}__{}", record.glyph_id, spec.tag());
            let file_name = format!("{glyph_id}.pgm");
            write_glyph_pgm(&out_dir.join(&file_name), &variant)?;
            new_records.push(CorpusRecord {
                glyph_id,
                image_path: PathBuf::from(file_name),
                ..record.clone()
            });
        }
    }
    let count = new_records.len();
    let new_manifest = CorpusManifest {
        records: new_records,
        sign_labels: manifest.sign_labels.clone(),
        scribe_labels: manifest.scribe_labels.clone(),
        base_dir: out_dir.to_path_buf(),
        source: manifest.source.clone(),
    };
    crate::corpus::write_manifest(&new_manifest, &out_dir.join("manifest.csv"))?;
    if !quiet {
        println!("augmented {} glyphs into {count} variants", manifest.records.len());
    }
    write_provenance(
        out_dir,
        "augment",
        cfg.seed,
        &config_echo(&cfg.augment)?,
        &[("corpus".to_string(), corpus_hash(&manifest)?)],
    )
}

/// Generate a synthetic corpus with ground-truth styles.
pub fn run_synth(cfg: &RunConfig, out_dir: &Path, quiet: bool) -> Result<()> {
    let mut spec = cfg.synth.clone();
    spec.seed = cfg.seed;
    let manifest = generate(&spec, out_dir)?;
    if !quiet {
        println!("{}", corpus_stats(&manifest)?);
    }
    write_provenance(out_dir, "synth", cfg.seed, &config_echo(&spec)?, &[])
}

fn load_training_corpus(corpus_dir: &Path) -> Result<(CorpusManifest, Vec<TrainExample>)> {
    let manifest = load_manifest(&corpus_dir.join("manifest.csv"))?;
    if manifest.records.is_empty() {
        return Err(GlyphError::Invalid("empty corpus".into()));
    }
    let glyphs = manifest.load_glyphs()?;
    let examples = manifest
        .records
        .iter()
        .zip(glyphs)
        .map(|(r, g)| TrainExample {
            image: g.to_tensor(),
            sign: r.sign_id,
            scribe: r.scribe_id,
        })
        .collect();
    Ok((manifest, examples))
}

/// Train the factored model or the autoencoder baseline; writes the
/// checkpoint, its metadata sidecar, and the per-epoch training log.
pub fn run_train(cfg: &RunConfig, out_dir: &Path, quiet: bool) -> Result<()> {
    let corpus_dir = config::require(&cfg.train.corpus, "train.corpus")?;
    let (manifest, examples) = load_training_corpus(&corpus_dir)?;
    let train_config = cfg.train.train_config(cfg.seed);
    ensure_dir(out_dir)?;
    let hash = corpus_hash(&manifest)?;

    let log = match cfg.train.model {
        ModelKind::Factored => {
            let (model, log) = train(&examples, manifest.sign_count(), manifest.scribe_count(), &train_config)?;
            model.save_checkpoint(&out_dir.join(CHECKPOINT_FILE))?;
            log
        }
        ModelKind::Autoencoder => {
            let (model, log) = train_autoencoder(&examples, &train_config)?;
            model.save_checkpoint(&out_dir.join(CHECKPOINT_FILE))?;
            log
        }
    };
    let meta = ModelMeta {
        kind: cfg.train.model.as_str().to_string(),
        sign_count: manifest.sign_count(),
        scribe_count: manifest.scribe_count(),
        corpus_hash: hash.clone(),
        sign_labels: manifest.sign_labels.clone(),
        scribe_labels: manifest.scribe_labels.clone(),
        train_config: train_config.clone(),
    };
    meta.save(&out_dir.join(META_FILE))?;
    let log_path = out_dir.join(TRAINING_LOG_FILE);
    std::fs::write(&log_path, log.to_csv()).map_err(|e| GlyphError::io(&log_path, e))?;
    if !quiet {
        if let Some(last) = log.epochs.last() {
            println!("trained {} epochs, final mean loss {}", last.epoch, last.total);
        }
    }
    write_provenance(
        out_dir,
        "train",
        cfg.seed,
        &config_echo(&cfg.train)?,
        &[("corpus".to_string(), hash)],
    )
}

fn load_meta(checkpoint_dir: &Path) -> Result<ModelMeta> {
    ModelMeta::load(&checkpoint_dir.join(META_FILE))
}

/// Export embedding tables as CSV. Factored checkpoints yield the sign and
/// scribe tables directly; autoencoder checkpoints need the corpus to embed
/// every glyph and average per scribe.
pub fn run_embed(cfg: &RunConfig, out_dir: &Path, quiet: bool) -> Result<()> {
    let checkpoint_dir = config::require(&cfg.embed.checkpoint, "embed.checkpoint")?;
    let meta = load_meta(&checkpoint_dir)?;
    ensure_dir(out_dir)?;
    match ModelKind::parse(&meta.kind)? {
        ModelKind::Factored => {
            let model = ModelParams::load_checkpoint(
                &checkpoint_dir.join(CHECKPOINT_FILE),
                meta.sign_count,
                meta.scribe_count,
                meta.train_config.embedding_dim,
                meta.train_config.width_mult,
            )?;
            let scribe_csv = embeddings_to_csv(model.scribe_embeddings(), &meta.scribe_labels)?;
            let sign_csv = embeddings_to_csv(model.sign_embeddings(), &meta.sign_labels)?;
            let scribe_path = out_dir.join(SCRIBE_EMBEDDINGS_FILE);
            std::fs::write(&scribe_path, scribe_csv).map_err(|e| GlyphError::io(&scribe_path, e))?;
            let sign_path = out_dir.join(SIGN_EMBEDDINGS_FILE);
            std::fs::write(&sign_path, sign_csv).map_err(|e| GlyphError::io(&sign_path, e))?;
        }
        ModelKind::Autoencoder => {
            let corpus_dir = config::require(&cfg.embed.corpus, "embed.corpus (required for autoencoder checkpoints)")?;
            let (manifest, examples) = load_training_corpus(&corpus_dir)?;
            let hash = corpus_hash(&manifest)?;
            if hash != meta.corpus_hash {
                return Err(GlyphError::Invalid(format!(
                    "corpus hash {hash} does not match the checkpoint's training corpus {}",
                    meta.corpus_hash
                )));
            }
            let model = Autoencoder::load_checkpoint(
                &checkpoint_dir.join(CHECKPOINT_FILE),
                meta.train_config.width_mult,
            )?;
            let image_embeddings = autoencoder::image_embeddings(&model, &examples)?;
            let glyph_labels: Vec<String> = manifest.records.iter().map(|r| r.glyph_id.clone()).collect();
            let image_path = out_dir.join(IMAGE_EMBEDDINGS_FILE);
            std::fs::write(&image_path, embeddings_to_csv(&image_embeddings, &glyph_labels)?)
                .map_err(|e| GlyphError::io(&image_path, e))?;
            let means = autoencoder::scribe_mean_embeddings(&image_embeddings, &examples, manifest.scribe_count())?;
            let scribe_path = out_dir.join(SCRIBE_EMBEDDINGS_FILE);
            std::fs::write(&scribe_path, embeddings_to_csv(&means, &manifest.scribe_labels)?)
                .map_err(|e| GlyphError::io(&scribe_path, e))?;
        }
    }
    if !quiet {
        println!("wrote embeddings for {} scribes", meta.scribe_count);
    }
    write_provenance(
        out_dir,
        "embed",
        cfg.seed,
        &config_echo(&cfg.embed)?,
        &[(
            checkpoint_dir.join(CHECKPOINT_FILE).display().to_string(),
            sha256_file(&checkpoint_dir.join(CHECKPOINT_FILE))?,
        )],
    )
}

/// Render the reconstruction grid for the requested scribes and signs
/// (default: all of them), including pairs never observed in training.
pub fn run_reconstruct(cfg: &RunConfig, out_dir: &Path, quiet: bool) -> Result<()> {
    let checkpoint_dir = config::require(&cfg.reconstruct.checkpoint, "reconstruct.checkpoint")?;
    let meta = load_meta(&checkpoint_dir)?;
    if ModelKind::parse(&meta.kind)? != ModelKind::Factored {
        return Err(GlyphError::Invalid(
            "reconstruction grids need a factored checkpoint (autoencoder has no embedding tables)".into(),
        ));
    }
    let model = ModelParams::load_checkpoint(
        &checkpoint_dir.join(CHECKPOINT_FILE),
        meta.sign_count,
        meta.scribe_count,
        meta.train_config.embedding_dim,
        meta.train_config.width_mult,
    )?;
    let resolve = |labels: &[String], requested: &[String], kind: &str| -> Result<Vec<usize>> {
        if requested.is_empty() {
            return Ok((0..labels.len()).collect());
        }
        requested
            .iter()
            .map(|want| {
                labels
                    .iter()
                    .position(|l| l == want)
                    .ok_or_else(|| GlyphError::Invalid(format!("unknown {kind} label {want:?}")))
            })
            .collect()
    };
    let scribes = resolve(&meta.scribe_labels, &cfg.reconstruct.scribes, "scribe")?;
    let signs = resolve(&meta.sign_labels, &cfg.reconstruct.signs, "sign")?;
    ensure_dir(out_dir)?;
    let grid_path = out_dir.join(GRID_FILE);
    reconstruct_grid(&model, &scribes, &signs, &grid_path)?;
    if !quiet {
        println!("wrote {} ({} x {} cells)", grid_path.display(), scribes.len(), signs.len());
    }
    write_provenance(
        out_dir,
        "reconstruct",
        cfg.seed,
        &config_echo(&cfg.reconstruct)?,
        &[(
            checkpoint_dir.join(CHECKPOINT_FILE).display().to_string(),
            sha256_file(&checkpoint_dir.join(CHECKPOINT_FILE))?,
        )],
    )
}

/// Probe scribe embeddings for findplace and compare with the most-common
/// baseline; writes a report.
pub fn run_eval_probe(cfg: &RunConfig, out_dir: &Path, quiet: bool) -> Result<()> {
    let emb_path = config::require(&cfg.eval_probe.embeddings, "eval_probe.embeddings")?;
    let mut embeddings = read_embeddings_csv(&emb_path)?;
    let mut inputs = vec![(emb_path.display().to_string(), sha256_file(&emb_path)?)];
    match (&cfg.eval_probe.findplaces, &cfg.eval_probe.manifest) {
        (Some(fp_path), _) => {
            let map = read_findplaces_csv(fp_path)?;
            attach_findplaces(&mut embeddings, &map);
            inputs.push((fp_path.display().to_string(), sha256_file(fp_path)?));
        }
        (None, Some(manifest_path)) => {
            let manifest = load_manifest(manifest_path)?;
            let by_scribe = manifest.scribe_findplaces()?;
            let map: std::collections::BTreeMap<String, String> = manifest
                .scribe_labels
                .iter()
                .zip(by_scribe)
                .filter_map(|(label, fp)| fp.map(|f| (label.clone(), f)))
                .collect();
            attach_findplaces(&mut embeddings, &map);
            inputs.push((manifest_path.display().to_string(), sha256_file(manifest_path)?));
        }
        (None, None) => {
            return Err(GlyphError::Config(
                "eval_probe needs a findplace source: eval_probe.findplaces or eval_probe.manifest".into(),
            ))
        }
    }
    let filtered = filter_findplaces(&embeddings)?;
    let result = probe_findplace(&filtered, cfg.seed, cfg.eval_probe.folds.0, cfg.eval_probe.inits.0)?;
    let labels = filtered.findplace_labels()?;
    let baseline = baseline_most_common(&labels, cfg.seed, cfg.eval_probe.folds.0)?;
    if !quiet {
        println!(
            "probe mean macro-F1 {} over {} folds (most-common baseline {baseline})",
            result.mean_f1, result.folds
        );
    }
    ensure_dir(out_dir)?;
    let header = ReportHeader {
        seed: cfg.seed,
        corpus_hash: String::new(),
        config_echo: config_echo(&cfg.eval_probe)?.replace('\n', "; "),
    };
    let fragments = vec![
        ReportFragment::MostCommon { f1: baseline },
        ReportFragment::Probe {
            model: cfg.eval_probe.model_name.0.clone(),
            result,
        },
    ];
    emit_report(&header, &fragments, &out_dir.join(REPORT_FILE))?;
    write_provenance(out_dir, "eval-probe", cfg.seed, &config_echo(&cfg.eval_probe)?, &inputs)
}

/// Score embeddings against manual features; writes a report.
pub fn run_eval_qvec(cfg: &RunConfig, out_dir: &Path, quiet: bool) -> Result<()> {
    let emb_path = config::require(&cfg.eval_qvec.embeddings, "eval_qvec.embeddings")?;
    let manual_path = config::require(&cfg.eval_qvec.manual, "eval_qvec.manual")?;
    let embeddings = read_embeddings_csv(&emb_path)?;
    let manual = read_manual_features_csv(&manual_path)?;
    let result = qvec(&embeddings, &manual)?;
    if !quiet {
        println!(
            "qvec score {} over {} shared scribes and {} features",
            result.score,
            result.shared_scribes,
            manual.feature_count()
        );
    }
    ensure_dir(out_dir)?;
    let header = ReportHeader {
        seed: cfg.seed,
        corpus_hash: String::new(),
        config_echo: config_echo(&cfg.eval_qvec)?.replace('\n', "; "),
    };
    let fragments = vec![ReportFragment::Qvec {
        model: cfg.eval_qvec.model_name.0.clone(),
        result,
    }];
    emit_report(&header, &fragments, &out_dir.join(REPORT_FILE))?;
    write_provenance(
        out_dir,
        "eval-qvec",
        cfg.seed,
        &config_echo(&cfg.eval_qvec)?,
        &[
            (emb_path.display().to_string(), sha256_file(&emb_path)?),
            (manual_path.display().to_string(), sha256_file(&manual_path)?),
        ],
    )
}

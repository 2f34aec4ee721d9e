use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use glyphfactor::cli::{self, config::ModelKind, RunConfig};
use glyphfactor::{GlyphError, Result};

/// Factored scribe/sign embedding learning for glyph corpora.
#[derive(Parser, Debug)]
#[command(name = "glyphfactor", version, disable_help_subcommand = true)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed for this run.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Preprocess a raw labeled corpus into 64x64 binary glyphs.
    Ingest {
        /// Manifest CSV of the raw corpus.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Treat dark pixels as ink (default true).
        #[arg(long)]
        ink_is_dark: Option<bool>,
    },
    /// Expand a preprocessed corpus into its 27 deterministic variants.
    Augment {
        /// Corpus directory (manifest.csv + PGMs).
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with known ground-truth styles.
    Synth(SynthArgs),
    /// Train the factored model or the autoencoder baseline.
    Train(TrainArgs),
    /// Export embedding tables from a checkpoint as CSV.
    Embed {
        /// Checkpoint directory produced by train.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Corpus directory (needed for autoencoder checkpoints).
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Render a scribe-by-sign reconstruction grid from a checkpoint.
    Reconstruct {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Comma-separated scribe labels (default: all).
        #[arg(long, value_delimiter = ',')]
        scribes: Vec<String>,
        /// Comma-separated sign labels (default: all).
        #[arg(long, value_delimiter = ',')]
        signs: Vec<String>,
    },
    /// Probe scribe embeddings for findplace with cross-validation.
    EvalProbe {
        /// Scribe embeddings CSV.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// scribe,findplace metadata CSV.
        #[arg(long)]
        findplaces: Option<PathBuf>,
        /// Corpus manifest to pull findplaces from instead.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        inits: Option<usize>,
        /// Model name for the report table.
        #[arg(long)]
        model_name: Option<String>,
    },
    /// Score embeddings against manual features.
    EvalQvec {
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Manual feature CSV (scribe,<feature names>).
        #[arg(long)]
        manual: Option<PathBuf>,
        #[arg(long)]
        model_name: Option<String>,
    },
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    signs: Option<usize>,
    #[arg(long)]
    scribes: Option<usize>,
    #[arg(long)]
    findplaces: Option<usize>,
    #[arg(long)]
    images_per_pair: Option<usize>,
    #[arg(long)]
    density: Option<f64>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Corpus directory (manifest.csv + PGMs).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Model kind: factored or autoencoder.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    embedding_dim: Option<usize>,
    #[arg(long)]
    lambda_sign: Option<f64>,
    #[arg(long)]
    lambda_scribe: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    width_mult: Option<f64>,
    /// Drop the reconstruction loss.
    #[arg(long)]
    no_recon: bool,
    /// Drop the sign discriminator loss.
    #[arg(long)]
    no_sign_disc: bool,
    /// Drop the scribe discriminator loss.
    #[arg(long)]
    no_scribe_disc: bool,
}

fn apply_overrides(config: &mut RunConfig, cli: &Cli) -> Result<()> {
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    match &cli.command {
        Command::Ingest { manifest, ink_is_dark } => {
            if let Some(m) = manifest {
                config.ingest.manifest = Some(m.clone());
            }
            if let Some(dark) = ink_is_dark {
                config.ingest.ink_is_dark = cli::config::IngestInk(*dark);
            }
        }
        Command::Augment { corpus } => {
            if let Some(c) = corpus {
                config.augment.corpus = Some(c.clone());
            }
        }
        Command::Synth(args) => {
            if let Some(v) = args.signs {
                config.synth.signs = v;
            }
            if let Some(v) = args.scribes {
                config.synth.scribes = v;
            }
            if let Some(v) = args.findplaces {
                config.synth.findplaces = v;
            }
            if let Some(v) = args.images_per_pair {
                config.synth.images_per_pair = v;
            }
            if let Some(v) = args.density {
                config.synth.density = v;
            }
        }
        Command::Train(args) => {
            if let Some(v) = &args.corpus {
                config.train.corpus = Some(v.clone());
            }
            if let Some(v) = &args.model {
                config.train.model = ModelKind::parse(v)?;
            }
            if let Some(v) = args.embedding_dim {
                config.train.embedding_dim = v;
            }
            if let Some(v) = args.lambda_sign {
                config.train.lambda_sign = v;
            }
            if let Some(v) = args.lambda_scribe {
                config.train.lambda_scribe = v;
            }
            if let Some(v) = args.learning_rate {
                config.train.learning_rate = v;
            }
            if let Some(v) = args.batch_size {
                config.train.batch_size = v;
            }
            if let Some(v) = args.epochs {
                config.train.epochs = v;
            }
            if let Some(v) = args.width_mult {
                config.train.width_mult = v;
            }
            if args.no_recon {
                config.train.recon = false;
            }
            if args.no_sign_disc {
                config.train.sign_disc = false;
            }
            if args.no_scribe_disc {
                config.train.scribe_disc = false;
            }
        }
        Command::Embed { checkpoint, corpus } => {
            if let Some(v) = checkpoint {
                config.embed.checkpoint = Some(v.clone());
            }
            if let Some(v) = corpus {
                config.embed.corpus = Some(v.clone());
            }
        }
        Command::Reconstruct { checkpoint, scribes, signs } => {
            if let Some(v) = checkpoint {
                config.reconstruct.checkpoint = Some(v.clone());
            }
            if !scribes.is_empty() {
                config.reconstruct.scribes = scribes.clone();
            }
            if !signs.is_empty() {
                config.reconstruct.signs = signs.clone();
            }
        }
        Command::EvalProbe {
            embeddings,
            findplaces,
            manifest,
            folds,
            inits,
            model_name,
        } => {
            if let Some(v) = embeddings {
                config.eval_probe.embeddings = Some(v.clone());
            }
            if let Some(v) = findplaces {
                config.eval_probe.findplaces = Some(v.clone());
            }
            if let Some(v) = manifest {
                config.eval_probe.manifest = Some(v.clone());
            }
            if let Some(v) = folds {
                config.eval_probe.folds = cli::config::Folds(*v);
            }
            if let Some(v) = inits {
                config.eval_probe.inits = cli::config::Inits(*v);
            }
            if let Some(v) = model_name {
                config.eval_probe.model_name = cli::config::ModelName(v.clone());
            }
        }
        Command::EvalQvec {
            embeddings,
            manual,
            model_name,
        } => {
            if let Some(v) = embeddings {
                config.eval_qvec.embeddings = Some(v.clone());
            }
            if let Some(v) = manual {
                config.eval_qvec.manual = Some(v.clone());
            }
            if let Some(v) = model_name {
                config.eval_qvec.model_name = cli::config::ModelName(v.clone());
            }
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    apply_overrides(&mut config, cli)?;
    let out = config
        .out
        .clone()
        .ok_or_else(|| GlyphError::Config("missing output directory (set out in the config or pass --out)".into()))?;
    let quiet = cli.quiet;
    match &cli.command {
        Command::Ingest { .. } => cli::run_ingest(&config, &out, quiet),
        Command::Augment { .. } => cli::run_augment(&config, &out, quiet),
        Command::Synth(_) => cli::run_synth(&config, &out, quiet),
        Command::Train(_) => cli::run_train(&config, &out, quiet),
        Command::Embed { .. } => cli::run_embed(&config, &out, quiet),
        Command::Reconstruct { .. } => cli::run_reconstruct(&config, &out, quiet),
        Command::EvalProbe { .. } => cli::run_eval_probe(&config, &out, quiet),
        Command::EvalQvec { .. } => cli::run_eval_qvec(&config, &out, quiet),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! End-to-end pipeline checks: ingest -> augment -> train -> embed ->
//! reconstruct -> eval, through the library entry points and the installed
//! binary (exit codes, error formatting).

use std::path::{Path, PathBuf};
use std::process::Command;

use glyphfactor::cli::{self, config::ModelKind, RunConfig};
use glyphfactor::corpus::load_manifest;
use glyphfactor::eval::report::parse_report;

fn write_raw_pgm(path: &Path, w: usize, h: usize, f: impl Fn(usize, usize) -> u8) {
    let mut buf = format!("P5\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            buf.push(f(x, y));
        }
    }
    std::fs::write(path, buf).unwrap();
}

fn write_raw_png(path: &Path, w: u32, h: u32, f: impl Fn(u32, u32) -> u8) {
    image::GrayImage::from_fn(w, h, |x, y| image::Luma([f(x, y)])).save(path).unwrap();
}

/// Raw corpus: dark glyphs on light ground, mixed PGM/PNG, varied sizes.
fn build_raw_corpus(dir: &Path) -> PathBuf {
    write_raw_pgm(&dir.join("a.pgm"), 80, 100, |x, y| {
        if (20..60).contains(&x) && (30..70).contains(&y) {
            20
        } else {
            230
        }
    });
    write_raw_png(&dir.join("b.png"), 64, 64, |x, y| {
        if x.abs_diff(y) < 5 {
            10
        } else {
            240
        }
    });
    write_raw_pgm(&dir.join("c.pgm"), 50, 40, |x, y| {
        if y > 10 && y < 30 && x > 5 && x < 45 && (x + y) % 7 != 0 {
            30
        } else {
            220
        }
    });
    let manifest = dir.join("manifest.csv");
    std::fs::write(
        &manifest,
        "glyph_id,sign,scribe,findplace,image_path\n\
         a,ka,hand1,north,a.pgm\n\
         b,ro,hand1,north,b.png\n\
         c,ka,hand2,south,c.pgm\n",
    )
    .unwrap();
    manifest
}

fn config_with(out: &Path) -> RunConfig {
    RunConfig {
        out: Some(out.to_path_buf()),
        ..RunConfig::default()
    }
}

#[test]
fn ingest_then_augment_counts_and_idempotence() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    std::fs::create_dir_all(&raw).unwrap();
    let manifest_path = build_raw_corpus(&raw);

    let ingest_out = dir.path().join("ingested");
    let mut cfg = config_with(&ingest_out);
    cfg.ingest.manifest = Some(manifest_path);
    cli::run_ingest(&cfg, &ingest_out, true).unwrap();

    let ingested = load_manifest(&ingest_out.join("manifest.csv")).unwrap();
    assert_eq!(ingested.records.len(), 3);
    assert_eq!(ingested.sign_count(), 2);
    assert_eq!(ingested.scribe_count(), 2);
    let glyphs = ingested.load_glyphs().unwrap();
    for g in &glyphs {
        assert!(g.is_binary());
        let ink = g.ink_count();
        assert!(ink > 0 && ink < 64 * 64, "ink {ink}");
    }

    // idempotence: re-running produces identical bytes
    let before: Vec<(String, Vec<u8>)> = sorted_dir_bytes(&ingest_out);
    cli::run_ingest(&cfg, &ingest_out, true).unwrap();
    let after = sorted_dir_bytes(&ingest_out);
    assert_eq!(before, after);

    // augment: 3 glyphs -> 81 rows
    let aug_out = dir.path().join("augmented");
    let mut cfg = config_with(&aug_out);
    cfg.augment.corpus = Some(ingest_out.clone());
    cli::run_augment(&cfg, &aug_out, true).unwrap();
    let augmented = load_manifest(&aug_out.join("manifest.csv")).unwrap();
    assert_eq!(augmented.records.len(), 3 * 27);
    assert_eq!(augmented.sign_count(), 2);
    // identity variant reproduces the ingested glyph bit-exactly
    let identity = augmented
        .records
        .iter()
        .find(|r| r.glyph_id == "a__mnone_dx0_dy0")
        .expect("identity variant present");
    let original = std::fs::read(ingest_out.join("a.pgm")).unwrap();
    let variant = std::fs::read(aug_out.join(&identity.image_path)).unwrap();
    assert_eq!(original, variant);
    // provenance sidecars exist
    assert!(ingest_out.join("provenance.toml").is_file());
    assert!(aug_out.join("provenance.toml").is_file());
}

fn sorted_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn train_embed_reconstruct_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let mut cfg = config_with(&corpus);
    cfg.seed = 5;
    cfg.synth.signs = 3;
    cfg.synth.scribes = 4;
    cfg.synth.findplaces = 2;
    cfg.synth.images_per_pair = 1;
    cfg.synth.density = 1.0;
    cli::run_synth(&cfg, &corpus, true).unwrap();

    // factored training, desk-scale
    let train_out = dir.path().join("train");
    let mut cfg = config_with(&train_out);
    cfg.seed = 3;
    cfg.train.corpus = Some(corpus.clone());
    cfg.train.embedding_dim = 4;
    cfg.train.width_mult = 1.0 / 64.0;
    cfg.train.epochs = 2;
    cfg.train.batch_size = 6;
    cli::run_train(&cfg, &train_out, true).unwrap();
    assert!(train_out.join("model.ckpt").is_file());
    assert!(train_out.join("model_meta.toml").is_file());
    let log = std::fs::read_to_string(train_out.join("training_log.csv")).unwrap();
    assert!(log.starts_with("epoch,recon_mse,sign_bce,scribe_bce,total"));
    assert_eq!(log.lines().count(), 3);

    // embeddings
    let embed_out = dir.path().join("embed");
    let mut cfg = config_with(&embed_out);
    cfg.embed.checkpoint = Some(train_out.clone());
    cli::run_embed(&cfg, &embed_out, true).unwrap();
    let scribe_csv = std::fs::read_to_string(embed_out.join("scribe_embeddings.csv")).unwrap();
    assert_eq!(scribe_csv.lines().count(), 5); // header + 4 scribes
    assert!(scribe_csv.starts_with("id,label,dim_0,dim_1,dim_2,dim_3"));
    let sign_csv = std::fs::read_to_string(embed_out.join("sign_embeddings.csv")).unwrap();
    assert_eq!(sign_csv.lines().count(), 4);

    // reconstruction grid for a subset, including pairs the corpus may lack
    let grid_out = dir.path().join("grid");
    let mut cfg = config_with(&grid_out);
    cfg.reconstruct.checkpoint = Some(train_out.clone());
    cfg.reconstruct.scribes = vec!["scribe00".into(), "scribe02".into()];
    cfg.reconstruct.signs = vec!["sign00".into(), "sign01".into(), "sign02".into()];
    cli::run_reconstruct(&cfg, &grid_out, true).unwrap();
    let grid = glyphfactor::corpus::image::read_pgm(&grid_out.join("grid.pgm")).unwrap();
    assert_eq!((grid.width(), grid.height()), (3 * 64, 2 * 64));

    // unknown label is a validation error
    let mut bad = config_with(&grid_out);
    bad.reconstruct.checkpoint = Some(train_out.clone());
    bad.reconstruct.scribes = vec!["nobody".into()];
    assert!(cli::run_reconstruct(&bad, &grid_out, true).is_err());
}

#[test]
fn autoencoder_train_and_embed() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let mut cfg = config_with(&corpus);
    cfg.seed = 8;
    cfg.synth.signs = 2;
    cfg.synth.scribes = 3;
    cfg.synth.findplaces = 1;
    cfg.synth.images_per_pair = 1;
    cli::run_synth(&cfg, &corpus, true).unwrap();

    let train_out = dir.path().join("ae");
    let mut cfg = config_with(&train_out);
    cfg.train.corpus = Some(corpus.clone());
    cfg.train.model = ModelKind::Autoencoder;
    cfg.train.width_mult = 1.0 / 64.0;
    cfg.train.epochs = 2;
    cfg.train.batch_size = 6;
    cli::run_train(&cfg, &train_out, true).unwrap();
    let log = std::fs::read_to_string(train_out.join("training_log.csv")).unwrap();
    assert!(log.starts_with("epoch,recon_mse,total"));

    let embed_out = dir.path().join("embed");
    let mut cfg = config_with(&embed_out);
    cfg.embed.checkpoint = Some(train_out.clone());
    // corpus is required for autoencoder embeddings
    assert!(cli::run_embed(&cfg, &embed_out, true).is_err());
    cfg.embed.corpus = Some(corpus.clone());
    cli::run_embed(&cfg, &embed_out, true).unwrap();
    let scribe_csv = std::fs::read_to_string(embed_out.join("scribe_embeddings.csv")).unwrap();
    assert_eq!(scribe_csv.lines().count(), 4); // header + 3 scribes
    let image_csv = std::fs::read_to_string(embed_out.join("image_embeddings.csv")).unwrap();
    assert_eq!(image_csv.lines().count(), 7); // header + 6 glyphs
}

#[test]
fn eval_commands_on_separable_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    // one-hot embeddings of the findplace itself, 3 classes x 3 scribes
    let mut emb = String::from("id,label,dim_0,dim_1,dim_2\n");
    let mut fps = String::from("scribe,findplace\n");
    for c in 0..3 {
        for i in 0..3 {
            let label = format!("h{c}{i}");
            let row: Vec<String> = (0..3).map(|d| if d == c { "1".into() } else { "0".into() }).collect();
            emb.push_str(&format!("{},{label},{}\n", c * 3 + i, row.join(",")));
            fps.push_str(&format!("{label},fp{c}\n"));
        }
    }
    let emb_path = dir.path().join("emb.csv");
    let fp_path = dir.path().join("fp.csv");
    std::fs::write(&emb_path, &emb).unwrap();
    std::fs::write(&fp_path, &fps).unwrap();

    let probe_out = dir.path().join("probe");
    let mut cfg = config_with(&probe_out);
    cfg.eval_probe.embeddings = Some(emb_path.clone());
    cfg.eval_probe.findplaces = Some(fp_path.clone());
    cfg.eval_probe.inits = cli::config::Inits(3);
    cfg.eval_probe.model_name = cli::config::ModelName("onehot".into());
    cli::run_eval_probe(&cfg, &probe_out, true).unwrap();
    let report = std::fs::read_to_string(probe_out.join("report.txt")).unwrap();
    let parsed = parse_report(&report).unwrap();
    assert_eq!(parsed.values["probe onehot.mean_f1"], 1.0);
    assert!(parsed.table.contains_key("most_common"));

    // qvec with manual == embeddings scores exactly F (= 3)
    let mut manual = String::from("scribe,f0,f1,f2\n");
    for (i, line) in emb.lines().skip(1).enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        // add scribe-varying values so columns are not constant
        manual.push_str(&format!(
            "{},{},{},{}\n",
            cells[1],
            cells[2].parse::<f64>().unwrap() + i as f64 * 0.01,
            cells[3].parse::<f64>().unwrap() + (i * i) as f64 * 0.01,
            cells[4].parse::<f64>().unwrap() - i as f64 * 0.02,
        ));
    }
    // embeddings matching those exact columns
    let mut emb2 = String::from("id,label,dim_0,dim_1,dim_2\n");
    for (i, line) in manual.lines().skip(1).enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        emb2.push_str(&format!("{i},{},{},{},{}\n", cells[0], cells[1], cells[2], cells[3]));
    }
    let emb2_path = dir.path().join("emb2.csv");
    let manual_path = dir.path().join("manual.csv");
    std::fs::write(&emb2_path, &emb2).unwrap();
    std::fs::write(&manual_path, &manual).unwrap();

    let qvec_out = dir.path().join("qvec");
    let mut cfg = config_with(&qvec_out);
    cfg.eval_qvec.embeddings = Some(emb2_path);
    cfg.eval_qvec.manual = Some(manual_path);
    cli::run_eval_qvec(&cfg, &qvec_out, true).unwrap();
    let report = std::fs::read_to_string(qvec_out.join("report.txt")).unwrap();
    let parsed = parse_report(&report).unwrap();
    assert_eq!(parsed.values["qvec model.score"], 3.0);
}

#[test]
fn binary_exit_codes_and_error_lines() {
    let bin = env!("CARGO_BIN_EXE_glyphfactor");
    let dir = tempfile::tempdir().unwrap();

    // missing manifest: validation error, exit 1, error: prefix on stderr
    let out = Command::new(bin)
        .args(["ingest", "--out"])
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error:"), "stderr: {stderr}");

    // broken image path in a manifest: row-numbered validation error
    let raw = dir.path().join("raw");
    std::fs::create_dir_all(&raw).unwrap();
    std::fs::write(
        raw.join("manifest.csv"),
        "glyph_id,sign,scribe,findplace,image_path\ng1,ka,h1,,missing.pgm\n",
    )
    .unwrap();
    let out = Command::new(bin)
        .args(["ingest", "--manifest"])
        .arg(raw.join("manifest.csv"))
        .arg("--out")
        .arg(dir.path().join("y"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("row 1"), "stderr: {stderr}");

    // unknown config key: validation error
    let cfg_path = dir.path().join("bad.toml");
    std::fs::write(&cfg_path, "nonsense = true\n").unwrap();
    let out = Command::new(bin)
        .args(["synth", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path().join("z"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // a valid tiny synth run exits 0 and prints stats on stdout
    let out = Command::new(bin)
        .args([
            "synth", "--scribes", "3", "--signs", "2", "--findplaces", "1", "--images-per-pair", "1", "--out",
        ])
        .arg(dir.path().join("ok"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("scribes (K): 3"), "stdout: {stdout}");
    // --quiet silences it
    let out = Command::new(bin)
        .args([
            "synth", "--quiet", "--scribes", "3", "--signs", "2", "--findplaces", "1", "--images-per-pair", "1",
            "--out",
        ])
        .arg(dir.path().join("ok2"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
}

use glyphfactor::eval::{baseline_most_common, filter_findplaces, probe_findplace, EmbeddingMatrix};
use glyphfactor::model::{train, TrainConfig, TrainExample};
use glyphfactor::synth::{generate, render_glyph, ground_truth, observed_pairs, SynthSpec};
use std::time::Instant;

fn probe_f1(model: &glyphfactor::model::ModelParams, manifest: &glyphfactor::corpus::CorpusManifest, seed: u64) -> (f64, f64) {
    let table = model.scribe_embeddings();
    let fps = manifest.scribe_findplaces().unwrap();
    let emb = EmbeddingMatrix::new(
        manifest.scribe_labels.clone(),
        (0..manifest.scribe_count()).map(|k| table.row(k).to_vec()).collect(),
        fps,
    ).unwrap();
    let filtered = filter_findplaces(&emb).unwrap();
    let result = probe_findplace(&filtered, seed, 5, 15).unwrap();
    let labels = filtered.findplace_labels().unwrap();
    let baseline = baseline_most_common(&labels, seed, 5).unwrap();
    (result.mean_f1, baseline)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let ipp: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(30);
    let lr: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(3e-3);
    let batch: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(10);
    let seeds: u64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(3);
    let lambda: f64 = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(1.0);

    println!("ipp={ipp} epochs={epochs} lr={lr} batch={batch} lambda={lambda}");
    let total_t = Instant::now();
    let mut full_mean = 0.0;
    let mut recon_mean = 0.0;
    let mut base_mean = 0.0;
    for seed in 0..seeds {
        let spec = SynthSpec { signs: 6, scribes: 9, findplaces: 3, images_per_pair: ipp, density: 0.8, seed, ..SynthSpec::default() };
        let dir = tempfile::tempdir().unwrap();
        let manifest = generate(&spec, dir.path()).unwrap();
        let glyphs = manifest.load_glyphs().unwrap();
        let examples: Vec<TrainExample> = manifest.records.iter().zip(glyphs).map(|(r, g)| TrainExample {
            image: g.to_tensor(), sign: r.sign_id, scribe: r.scribe_id,
        }).collect();
        println!("  seed {seed}: {} examples", examples.len());

        let full_cfg = TrainConfig { width_mult: 0.125, batch_size: batch, epochs, learning_rate: lr, seed, lambda_sign: lambda, lambda_scribe: lambda, ..TrainConfig::default() };
        let t = Instant::now();
        let (full_model, log) = train(&examples, 6, 9, &full_cfg).unwrap();
        let full_time = t.elapsed();
        let (full_f1, baseline) = probe_f1(&full_model, &manifest, seed + 1000);
        let first = &log.epochs[0];
        let last = log.epochs.last().unwrap();
        println!("    full: {full_time:?}  loss {:.4}->{:.4}  probe {full_f1:.3} baseline {baseline:.3}", first.total, last.total);

        let recon_cfg = TrainConfig { sign_disc: false, scribe_disc: false, ..full_cfg.clone() };
        let t = Instant::now();
        let (recon_model, _) = train(&examples, 6, 9, &recon_cfg).unwrap();
        let recon_time = t.elapsed();
        let (recon_f1, _) = probe_f1(&recon_model, &manifest, seed + 1000);
        println!("    recon: {recon_time:?}  probe {recon_f1:.3}");

        // held-out cell reconstruction vs all-background baseline
        let styles = ground_truth(&spec).unwrap();
        let pairs = observed_pairs(&spec).unwrap();
        let mut held_mse = 0.0; let mut held_base = 0.0; let mut held_n = 0;
        for k in 0..9 { for j in 0..6 {
            if !pairs.contains(&(k, j)) {
                let reference = render_glyph(&spec, &styles[k], j, 0).to_tensor();
                let recon = full_model.decode(j, k).unwrap();
                let mse: f64 = reference.data().iter().zip(recon.data()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / 4096.0;
                let base: f64 = reference.data().iter().map(|a| a * a).sum::<f64>() / 4096.0;
                held_mse += mse; held_base += base; held_n += 1;
            }
        }}
        println!("    held-out cells {held_n}: model mse {:.5} vs background {:.5}", held_mse / held_n as f64, held_base / held_n as f64);

        full_mean += full_f1 / seeds as f64;
        recon_mean += recon_f1 / seeds as f64;
        base_mean += baseline / seeds as f64;
    }
    println!("MEANS: full {full_mean:.3} recon {recon_mean:.3} baseline {base_mean:.3} margin {:.3} full>=recon {}", full_mean - base_mean, full_mean >= recon_mean);
    println!("total time {:?}", total_t.elapsed());
}

use glyphfactor::model::{train, TrainConfig, TrainExample};
use glyphfactor::synth::{generate, ground_truth, observed_pairs, render_glyph, SynthSpec};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let ipp: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(18);
    let spec = SynthSpec { signs: 6, scribes: 9, findplaces: 3, images_per_pair: ipp, density: 0.8, seed: 0, ..SynthSpec::default() };
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate(&spec, dir.path()).unwrap();
    let glyphs = manifest.load_glyphs().unwrap();
    let examples: Vec<TrainExample> = manifest.records.iter().zip(glyphs).map(|(r, g)| TrainExample {
        image: g.to_tensor(), sign: r.sign_id, scribe: r.scribe_id,
    }).collect();
    let cfg = TrainConfig { width_mult: 0.125, batch_size: 10, epochs, learning_rate: 3e-3, seed: 0,
        lambda_sign: 0.05, lambda_scribe: 0.05, ..TrainConfig::default() };
    let (model, log) = train(&examples, 6, 9, &cfg).unwrap();
    println!("final recon mse (train): {}", log.epochs.last().unwrap().recon_mse.unwrap());

    // map labels: manifest sign_id vs synth j. manifest dense ids assigned in
    // first-appearance order of labels "signXX"; map via label parse.
    let sign_of = |label: &str| -> usize { label[4..].parse().unwrap() };
    let scribe_of = |label: &str| -> usize { label[6..].parse().unwrap() };
    let styles = ground_truth(&spec).unwrap();
    let pairs = observed_pairs(&spec).unwrap();
    let mut total_model = 0.0; let mut total_bg = 0.0; let mut n = 0;
    for k in 0..9 { for j in 0..6 {
        if !pairs.contains(&(k, j)) {
            // dense ids for (j, k) from the manifest label maps
            let dj = manifest.sign_labels.iter().position(|l| sign_of(l) == j).unwrap();
            let dk = manifest.scribe_labels.iter().position(|l| scribe_of(l) == k).unwrap();
            let reference = render_glyph(&spec, &styles[k], j, 0).to_tensor();
            let recon = model.decode(dj, dk).unwrap();
            let mse: f64 = reference.data().iter().zip(recon.data()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / 4096.0;
            let bg: f64 = reference.data().iter().map(|a| a * a).sum::<f64>() / 4096.0;
            let ref_ink: f64 = reference.data().iter().sum();
            let out_ink: f64 = recon.data().iter().sum();
            let overlap: f64 = reference.data().iter().zip(recon.data()).map(|(a, b)| a * b).sum();
            println!("cell k={k} (thick {}) j={j}: mse {:.4} bg {:.4} {} | ref ink {:.0} out mass {:.0} overlap {:.0}",
                styles[k].thickness, mse, bg, if mse < bg { "OK " } else { "BAD" }, ref_ink, out_ink, overlap);
            total_model += mse; total_bg += bg; n += 1;
        }
    }}
    println!("mean over {n}: model {:.4} bg {:.4}", total_model / n as f64, total_bg / n as f64);
}

use glyphfactor::model::{loss::example_grads, LossConfig, ModelParams, TrainExample};
use glyphfactor::model::{train, TrainConfig};
use glyphfactor::synth::{generate, SynthSpec};

fn row_norm(t: &glyphfactor::nncore::Tensor, row: usize) -> f64 {
    t.row(row).iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn main() {
    let spec = SynthSpec { signs: 6, scribes: 9, findplaces: 3, images_per_pair: 1, density: 0.8, seed: 0, ..SynthSpec::default() };
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate(&spec, dir.path()).unwrap();
    let glyphs = manifest.load_glyphs().unwrap();
    let examples: Vec<TrainExample> = manifest.records.iter().zip(glyphs).map(|(r, g)| TrainExample {
        image: g.to_tensor(), sign: r.sign_id, scribe: r.scribe_id,
    }).collect();

    let model = ModelParams::init(6, 9, 16, 0.125, 0);
    let ex = &examples[0];
    let recon_cfg = LossConfig { sign_disc: false, scribe_disc: false, ..LossConfig::default() };
    let disc_cfg = LossConfig { recon: false, sign_disc: false, ..LossConfig::default() };
    let (_, g_recon) = example_grads(&model, &ex.image, ex.sign, ex.scribe, (ex.sign + 1) % 6, (ex.scribe + 1) % 9, &recon_cfg).unwrap();
    let (_, g_disc) = example_grads(&model, &ex.image, ex.sign, ex.scribe, (ex.sign + 1) % 6, (ex.scribe + 1) % 9, &disc_cfg).unwrap();
    let zr = g_recon.get(ModelParams::SCRIBE_TABLE_PATH).unwrap();
    let zd = g_disc.get(ModelParams::SCRIBE_TABLE_PATH).unwrap();
    println!("INIT: |recon grad Z_k| = {:.6}  |scribe-disc grad Z_k| = {:.6}  ratio disc/recon = {:.2}",
        row_norm(zr, ex.scribe), row_norm(zd, ex.scribe), row_norm(zd, ex.scribe) / row_norm(zr, ex.scribe));

    // after short training: has the scribe discriminator learned?
    let cfg = TrainConfig { width_mult: 0.125, batch_size: 10, epochs: 15, learning_rate: 3e-3, seed: 0, ..TrainConfig::default() };
    let t = std::time::Instant::now();
    let (trained, _) = train(&examples, 6, 9, &cfg).unwrap();
    println!("trained 15 epochs in {:?}", t.elapsed());
    let mut p_true = 0.0;
    let mut p_false = 0.0;
    for (i, ex) in examples.iter().enumerate() {
        p_true += trained.discriminate_scribe(&ex.image, ex.scribe).unwrap();
        p_false += trained.discriminate_scribe(&ex.image, (ex.scribe + 1 + i % 8) % 9).unwrap();
    }
    let n = examples.len() as f64;
    println!("scribe disc after 15 epochs: mean p(true) {:.3}  mean p(false) {:.3}", p_true / n, p_false / n);

    let (_, g_recon) = example_grads(&trained, &examples[0].image, examples[0].sign, examples[0].scribe, 1, 1, &recon_cfg).unwrap();
    let (_, g_disc) = example_grads(&trained, &examples[0].image, examples[0].sign, examples[0].scribe, 1, 1, &disc_cfg).unwrap();
    let zr = g_recon.get(ModelParams::SCRIBE_TABLE_PATH).unwrap();
    let zd = g_disc.get(ModelParams::SCRIBE_TABLE_PATH).unwrap();
    println!("AFTER: |recon grad Z_k| = {:.6}  |disc grad Z_k| = {:.6}  ratio = {:.2}",
        row_norm(zr, examples[0].scribe), row_norm(zd, examples[0].scribe), row_norm(zd, examples[0].scribe) / row_norm(zr, examples[0].scribe));

    // scribe table geometry
    let z = trained.scribe_embeddings();
    for k in 0..9 { print!("|Z_{k}|={:.3} ", row_norm(z, k)); }
    println!();
}

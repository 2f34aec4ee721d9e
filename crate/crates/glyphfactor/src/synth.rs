//! Synthetic glyph corpora with known ground truth: procedurally generated
//! sign prototypes, per-scribe style transforms (shear, stroke thickness,
//! anchor jitter) clustered by synthetic findplace, rendered deterministically
//! from a seed. Used to verify disentanglement end to end without shipping
//! binary assets.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augment::dilate;
use crate::corpus::{load_manifest, write_glyph_pgm, CorpusManifest, GlyphImage, GLYPH_SIZE};
use crate::eval::folds::derive_seed;
use crate::{GlyphError, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub signs: usize,
    pub scribes: usize,
    pub findplaces: usize,
    pub images_per_pair: usize,
    /// Fraction of (scribe, sign) pairs observed, in (0, 1].
    pub density: f64,
    pub seed: u64,
    /// Within-cluster spread of the shear style parameter.
    pub shear_spread: f64,
    /// Within-cluster spread of the jitter amplitude (pixels).
    pub jitter_spread: f64,
}

impl Default for SynthSpec {
    fn default() -> SynthSpec {
        SynthSpec {
            signs: 6,
            scribes: 9,
            findplaces: 3,
            images_per_pair: 2,
            density: 1.0,
            seed: 0,
            shear_spread: 0.05,
            jitter_spread: 0.15,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.signs < 2 || self.scribes < 2 {
            return Err(GlyphError::Config("synthetic corpus needs J >= 2 and K >= 2".into()));
        }
        if self.findplaces == 0 || self.findplaces > self.scribes {
            return Err(GlyphError::Config(format!(
                "findplace count must be in 1..={}",
                self.scribes
            )));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(GlyphError::Config("density must be in (0, 1]".into()));
        }
        if self.images_per_pair == 0 {
            return Err(GlyphError::Config("images_per_pair must be positive".into()));
        }
        Ok(())
    }
}

/// Latent style of one scribe. Thickness is in pixels (>= 1), realized as
/// thickness - 1 dilations of the 1-pixel stroke.
#[derive(Clone, Debug, PartialEq)]
pub struct ScribeStyle {
    pub scribe: usize,
    pub findplace: usize,
    pub shear: f64,
    pub thickness: u32,
    pub jitter: f64,
}

/// Cluster (findplace) id of a scribe: contiguous blocks of roughly equal
/// size, e.g. K=9 with 3 findplaces gives 3 blocks of 3.
pub fn findplace_of(scribe: usize, scribes: usize, findplaces: usize) -> usize {
    scribe * findplaces / scribes
}

fn cluster_center(c: usize, findplaces: usize) -> (f64, u32, f64) {
    let t = if findplaces > 1 {
        c as f64 / (findplaces - 1) as f64
    } else {
        0.5
    };
    let shear = -0.45 + 0.9 * t;
    let thickness = 1 + (c % 3) as u32;
    let jitter = 0.6 + 1.4 * t;
    (shear, thickness, jitter)
}

/// The latent style parameters and findplace assignment for every scribe.
/// Styles sit in a tight, seeded spread around their cluster center, so
/// same-findplace scribes are closer in style space than cross-findplace
/// pairs by construction.
pub fn ground_truth(spec: &SynthSpec) -> Result<Vec<ScribeStyle>> {
    spec.validate()?;
    let mut styles = Vec::with_capacity(spec.scribes);
    for k in 0..spec.scribes {
        let c = findplace_of(k, spec.scribes, spec.findplaces);
        let (shear_c, thickness_c, jitter_c) = cluster_center(c, spec.findplaces);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[2, k as u64]));
        styles.push(ScribeStyle {
            scribe: k,
            findplace: c,
            shear: shear_c + rng.gen_range(-spec.shear_spread..=spec.shear_spread),
            thickness: thickness_c,
            jitter: (jitter_c + rng.gen_range(-spec.jitter_spread..=spec.jitter_spread)).max(0.0),
        });
    }
    Ok(styles)
}

pub fn scribe_label(k: usize) -> String {
    format!("scribe{k:02}")
}

pub fn sign_label(j: usize) -> String {
    format!("sign{j:02}")
}

pub fn findplace_label(c: usize) -> String {
    format!("fp{c}")
}

/// Ground truth as CSV `scribe,findplace,shear,thickness,jitter`, with the
/// same scribe and findplace labels as the generated manifest.
pub fn ground_truth_csv(spec: &SynthSpec) -> Result<String> {
    let styles = ground_truth(spec)?;
    let mut out = String::from("scribe,findplace,shear,thickness,jitter\n");
    for s in &styles {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            scribe_label(s.scribe),
            findplace_label(s.findplace),
            s.shear,
            s.thickness,
            s.jitter
        ));
    }
    Ok(out)
}

/// Sign prototype: a seeded random open polyline of 4-6 anchors placed with
/// a margin, identical for every scribe.
fn prototype_anchors(spec: &SynthSpec, sign: usize) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[3, sign as u64]));
    let count = rng.gen_range(4..=6);
    (0..count)
        .map(|_| {
            (
                rng.gen_range(14.0..50.0),
                rng.gen_range(14.0..50.0),
            )
        })
        .collect()
}

fn draw_segment(img: &mut GlyphImage, a: (f64, f64), b: (f64, f64)) {
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize * 2).max(1);
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let x = a.0 + t * (b.0 - a.0);
        let y = a.1 + t * (b.1 - a.1);
        let xi = x.round().clamp(0.0, (GLYPH_SIZE - 1) as f64) as usize;
        let yi = y.round().clamp(0.0, (GLYPH_SIZE - 1) as f64) as usize;
        img.set(xi, yi, 1.0);
    }
}

/// Render one glyph instance: shear the prototype anchors around the frame
/// center, jitter each anchor with a per-image stream, rasterize the
/// polyline, and thicken by dilation.
pub fn render_glyph(spec: &SynthSpec, style: &ScribeStyle, sign: usize, instance: usize) -> GlyphImage {
    let anchors = prototype_anchors(spec, sign);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        spec.seed,
        &[4, style.scribe as u64, sign as u64, instance as u64],
    ));
    let center = (GLYPH_SIZE / 2) as f64;
    let transformed: Vec<(f64, f64)> = anchors
        .iter()
        .map(|&(x, y)| {
            let sheared_x = x + style.shear * (y - center);
            let jx = rng.gen_range(-style.jitter..=style.jitter);
            let jy = rng.gen_range(-style.jitter..=style.jitter);
            (
                (sheared_x + jx).clamp(2.0, (GLYPH_SIZE - 3) as f64),
                (y + jy).clamp(2.0, (GLYPH_SIZE - 3) as f64),
            )
        })
        .collect();
    let mut img = GlyphImage::zeros();
    for pair in transformed.windows(2) {
        draw_segment(&mut img, pair[0], pair[1]);
    }
    for _ in 1..style.thickness {
        img = dilate(&img);
    }
    img
}

/// Deterministic selection of observed (scribe, sign) pairs: coverage first
/// (every sign and every scribe appears at least once), then seeded random
/// pairs up to ceil(density * K * J).
pub fn observed_pairs(spec: &SynthSpec) -> Result<Vec<(usize, usize)>> {
    spec.validate()?;
    let total = spec.scribes * spec.signs;
    let target = ((spec.density * total as f64).ceil() as usize).clamp(1, total);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[5]));
    let mut chosen = std::collections::BTreeSet::new();
    for j in 0..spec.signs {
        let k = rng.gen_range(0..spec.scribes);
        chosen.insert((k, j));
    }
    for k in 0..spec.scribes {
        if !chosen.iter().any(|&(ck, _)| ck == k) {
            let j = rng.gen_range(0..spec.signs);
            chosen.insert((k, j));
        }
    }
    let mut rest: Vec<(usize, usize)> = (0..spec.scribes)
        .flat_map(|k| (0..spec.signs).map(move |j| (k, j)))
        .filter(|p| !chosen.contains(p))
        .collect();
    use rand::seq::SliceRandom;
    rest.shuffle(&mut rng);
    for p in rest {
        if chosen.len() >= target {
            break;
        }
        chosen.insert(p);
    }
    Ok(chosen.into_iter().collect())
}

/// Generate a corpus directory: one PGM per glyph instance, a manifest CSV in
/// the standard ingest schema (findplace column filled), and the ground-truth
/// style CSV. Byte-identical across runs with the same spec.
pub fn generate(spec: &SynthSpec, out_dir: &Path) -> Result<CorpusManifest> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| GlyphError::io(out_dir, e))?;
    let styles = ground_truth(spec)?;
    let pairs = observed_pairs(spec)?;

    let mut manifest_csv = String::from("glyph_id,sign,scribe,findplace,image_path\n");
    for &(k, j) in &pairs {
        for i in 0..spec.images_per_pair {
            let glyph_id = format!("{}_{}_i{}", scribe_label(k), sign_label(j), i);
            let file_name = format!("{glyph_id}.pgm");
            let glyph = render_glyph(spec, &styles[k], j, i);
            write_glyph_pgm(&out_dir.join(&file_name), &glyph)?;
            manifest_csv.push_str(&format!(
                "{},{},{},{},{}\n",
                glyph_id,
                sign_label(j),
                scribe_label(k),
                findplace_label(styles[k].findplace),
                file_name
            ));
        }
    }
    let manifest_path = out_dir.join("manifest.csv");
    std::fs::write(&manifest_path, manifest_csv).map_err(|e| GlyphError::io(&manifest_path, e))?;
    let gt_path = out_dir.join("ground_truth.csv");
    std::fs::write(&gt_path, ground_truth_csv(spec)?).map_err(|e| GlyphError::io(&gt_path, e))?;
    load_manifest(&manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_density_counts_match() {
        let spec = SynthSpec {
            signs: 5,
            scribes: 6,
            findplaces: 2,
            images_per_pair: 2,
            density: 1.0,
            seed: 1,
            ..SynthSpec::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let manifest = generate(&spec, dir.path()).unwrap();
        assert_eq!(manifest.records.len(), 5 * 6 * 2);
        assert_eq!(manifest.sign_count(), 5);
        assert_eq!(manifest.scribe_count(), 6);
    }

    #[test]
    fn half_density_keeps_coverage() {
        let spec = SynthSpec {
            signs: 6,
            scribes: 8,
            findplaces: 2,
            images_per_pair: 1,
            density: 0.5,
            seed: 3,
            ..SynthSpec::default()
        };
        let pairs = observed_pairs(&spec).unwrap();
        let target = (0.5f64 * 48.0).ceil() as usize;
        assert!(pairs.len() >= target && pairs.len() <= target + spec.signs + spec.scribes);
        for j in 0..spec.signs {
            assert!(pairs.iter().any(|&(_, pj)| pj == j), "sign {j} unobserved");
        }
        for k in 0..spec.scribes {
            assert!(pairs.iter().any(|&(pk, _)| pk == k), "scribe {k} unobserved");
        }
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let spec = SynthSpec {
            signs: 3,
            scribes: 4,
            findplaces: 2,
            images_per_pair: 1,
            density: 0.9,
            seed: 7,
            ..SynthSpec::default()
        };
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        generate(&spec, dir_a.path()).unwrap();
        generate(&spec, dir_b.path()).unwrap();
        let mut names: Vec<String> = std::fs::read_dir(dir_a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert!(names.len() > 3);
        for name in names {
            let a = std::fs::read(dir_a.path().join(&name)).unwrap();
            let b = std::fs::read(dir_b.path().join(&name)).unwrap();
            assert_eq!(a, b, "file {name} differs");
        }
    }

    #[test]
    fn rendered_glyphs_are_valid_binary() {
        let spec = SynthSpec::default();
        let styles = ground_truth(&spec).unwrap();
        for style in &styles {
            let img = render_glyph(&spec, style, 0, 0);
            assert!(img.is_binary());
            assert!(img.ink_count() > 0, "empty glyph for scribe {}", style.scribe);
        }
    }

    #[test]
    fn thicker_styles_leave_more_ink() {
        let spec = SynthSpec::default();
        let mut styles = ground_truth(&spec).unwrap();
        styles[0].thickness = 1;
        let thin = render_glyph(&spec, &styles[0], 2, 0).ink_count();
        styles[0].thickness = 3;
        let thick = render_glyph(&spec, &styles[0], 2, 0).ink_count();
        assert!(thick > 2 * thin, "thin {thin}, thick {thick}");
    }

    #[test]
    fn nine_scribes_three_findplaces_three_each() {
        let spec = SynthSpec {
            scribes: 9,
            findplaces: 3,
            ..SynthSpec::default()
        };
        let styles = ground_truth(&spec).unwrap();
        for c in 0..3 {
            assert_eq!(styles.iter().filter(|s| s.findplace == c).count(), 3);
        }
    }

    #[test]
    fn within_cluster_styles_tighter_than_across() {
        let spec = SynthSpec {
            scribes: 9,
            findplaces: 3,
            ..SynthSpec::default()
        };
        let styles = ground_truth(&spec).unwrap();
        let dist = |a: &ScribeStyle, b: &ScribeStyle| {
            let ds = a.shear - b.shear;
            let dt = a.thickness as f64 - b.thickness as f64;
            let dj = a.jitter - b.jitter;
            (ds * ds + dt * dt + dj * dj).sqrt()
        };
        let mut within = Vec::new();
        let mut across = Vec::new();
        for a in 0..styles.len() {
            for b in (a + 1)..styles.len() {
                let d = dist(&styles[a], &styles[b]);
                if styles[a].findplace == styles[b].findplace {
                    within.push(d);
                } else {
                    across.push(d);
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let across_mean = mean(&across);
        for &w in &within {
            assert!(w < across_mean, "within {w} >= across mean {across_mean}");
        }
    }

    #[test]
    fn styles_stay_within_declared_spread_of_centers() {
        let spec = SynthSpec {
            scribes: 12,
            findplaces: 4,
            ..SynthSpec::default()
        };
        let styles = ground_truth(&spec).unwrap();
        for s in &styles {
            let (shear_c, thickness_c, jitter_c) = cluster_center(s.findplace, spec.findplaces);
            assert!((s.shear - shear_c).abs() <= spec.shear_spread + 1e-12);
            assert_eq!(s.thickness, thickness_c);
            assert!((s.jitter - jitter_c).abs() <= spec.jitter_spread + 1e-12);
        }
    }

    #[test]
    fn ground_truth_ids_match_manifest_labels() {
        let spec = SynthSpec {
            signs: 3,
            scribes: 4,
            findplaces: 2,
            images_per_pair: 1,
            density: 1.0,
            seed: 11,
            ..SynthSpec::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let manifest = generate(&spec, dir.path()).unwrap();
        let gt = ground_truth_csv(&spec).unwrap();
        let gt_scribes: std::collections::BTreeSet<&str> =
            gt.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        let manifest_scribes: std::collections::BTreeSet<&str> =
            manifest.scribe_labels.iter().map(|s| s.as_str()).collect();
        assert_eq!(gt_scribes, manifest_scribes);
        // findplaces in the manifest match ground truth per scribe
        let fps = manifest.scribe_findplaces().unwrap();
        let styles = ground_truth(&spec).unwrap();
        for r in &manifest.records {
            let style = styles
                .iter()
                .find(|s| scribe_label(s.scribe) == r.scribe_label)
                .unwrap();
            assert_eq!(fps[r.scribe_id].as_deref(), Some(findplace_label(style.findplace).as_str()));
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = SynthSpec::default();
        spec.density = 0.0;
        assert!(spec.validate().is_err());
        spec = SynthSpec::default();
        spec.scribes = 1;
        assert!(spec.validate().is_err());
        spec = SynthSpec::default();
        spec.findplaces = 20;
        assert!(spec.validate().is_err());
    }
}

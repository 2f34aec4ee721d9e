use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{GlyphError, Result};

use std::collections::BTreeMap;

/// Mix a base seed with stream identifiers (splitmix64 steps), so folds,
/// inits, and shuffles each get an independent deterministic stream.
pub fn derive_seed(base: u64, streams: &[u64]) -> u64 {
    let mut state = base;
    for &s in streams {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(s);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        state = z ^ (z >> 31);
    }
    state
}

/// Partition item indices into k folds stratified by class label: every item
/// lands in exactly one fold and each class spreads over the folds as evenly
/// as possible. Classes iterate in lexicographic order and members shuffle
/// under the seed, so the partition is deterministic. Fails if any train
/// split (the complement of one fold) would lack a class entirely.
pub fn stratified_folds(labels: &[String], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(GlyphError::Eval(format!("need at least 2 folds, got {k}")));
    }
    if labels.len() < k {
        return Err(GlyphError::Eval(format!(
            "cannot split {} items into {k} folds",
            labels.len()
        )));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, label) in labels.iter().enumerate() {
        by_class.entry(label.as_str()).or_default().push(i);
    }
    if by_class.len() < 2 {
        return Err(GlyphError::Eval("stratification needs at least 2 classes".into()));
    }

    for attempt in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[attempt]));
        let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
        let mut next = 0usize;
        for members in by_class.values() {
            let mut members = members.clone();
            members.shuffle(&mut rng);
            for idx in members {
                folds[next % k].push(idx);
                next += 1;
            }
        }
        let valid = (0..k).all(|test| {
            let mut train_classes: BTreeMap<&str, usize> = BTreeMap::new();
            for (f, fold) in folds.iter().enumerate() {
                if f != test {
                    for &i in fold {
                        *train_classes.entry(labels[i].as_str()).or_default() += 1;
                    }
                }
            }
            train_classes.len() == by_class.len()
        });
        if valid {
            for fold in &mut folds {
                fold.sort_unstable();
            }
            return Ok(folds);
        }
    }
    Err(GlyphError::Eval(
        "stratification impossible: some class cannot appear in every train split".into(),
    ))
}

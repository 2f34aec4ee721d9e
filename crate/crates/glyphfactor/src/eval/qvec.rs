use std::collections::BTreeMap;

use crate::{GlyphError, Result};

use super::EmbeddingMatrix;

/// Manually coded scribe features: M scribes by F named feature columns.
#[derive(Clone, Debug, PartialEq)]
pub struct ManualFeatureMatrix {
    pub scribe_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ManualFeatureMatrix {
    pub fn new(scribe_ids: Vec<String>, feature_names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<ManualFeatureMatrix> {
        if scribe_ids.len() != rows.len() {
            return Err(GlyphError::Eval(format!(
                "manual features: {} ids vs {} rows",
                scribe_ids.len(),
                rows.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(GlyphError::Eval(format!(
                    "manual feature row {i} has {} values, expected {}",
                    row.len(),
                    feature_names.len()
                )));
            }
        }
        Ok(ManualFeatureMatrix {
            scribe_ids,
            feature_names,
            rows,
        })
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QvecResult {
    pub score: f64,
    /// Per manual feature: the embedding dimension it aligned to and the
    /// correlation it contributed.
    pub assignments: Vec<(String, usize, f64)>,
    pub shared_scribes: usize,
}

/// Pearson correlation with exact self-correlation: computed as
/// sign * sqrt(cov^2 / (var_a * var_b)), so bitwise-identical columns score
/// exactly 1. Zero-variance columns correlate 0 by convention.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let da = x - ma;
        let db = y - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    let r = ((sab * sab) / (saa * sbb)).sqrt().min(1.0);
    if sab >= 0.0 {
        r
    } else {
        -r
    }
}

/// Many-to-one alignment score between learned embeddings and manual
/// features: restrict both matrices to the shared scribes, correlate every
/// (feature, dimension) pair over those scribes, and let each manual feature
/// pick the single embedding dimension maximizing its correlation (many
/// features may share a dimension). The score is the sum of the picked
/// correlations; negative correlations are not rectified.
pub fn qvec(embeddings: &EmbeddingMatrix, manual: &ManualFeatureMatrix) -> Result<QvecResult> {
    let emb_index: BTreeMap<&str, usize> = embeddings
        .ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    // shared scribes in embedding row order
    let mut shared: Vec<(usize, usize)> = Vec::new();
    for (mi, id) in manual.scribe_ids.iter().enumerate() {
        if let Some(&ei) = emb_index.get(id.as_str()) {
            shared.push((ei, mi));
        }
    }
    shared.sort_unstable();
    if shared.is_empty() {
        return Err(GlyphError::Eval(
            "no shared scribes between embeddings and manual features".into(),
        ));
    }
    if shared.len() < 2 {
        return Err(GlyphError::Eval(format!(
            "need at least 2 shared scribes for correlation, got {}",
            shared.len()
        )));
    }

    let d = embeddings.dim();
    let emb_cols: Vec<Vec<f64>> = (0..d)
        .map(|e| shared.iter().map(|&(ei, _)| embeddings.rows[ei][e]).collect())
        .collect();
    let mut score = 0.0;
    let mut assignments = Vec::with_capacity(manual.feature_count());
    for (f, name) in manual.feature_names.iter().enumerate() {
        let feature_col: Vec<f64> = shared.iter().map(|&(_, mi)| manual.rows[mi][f]).collect();
        let mut best_dim = 0;
        let mut best_r = f64::NEG_INFINITY;
        for (e, col) in emb_cols.iter().enumerate() {
            let r = pearson(&feature_col, col);
            if r > best_r {
                best_r = r;
                best_dim = e;
            }
        }
        score += best_r;
        assignments.push((name.clone(), best_dim, best_r));
    }
    Ok(QvecResult {
        score,
        assignments,
        shared_scribes: shared.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn embeddings(ids: &[&str], cols: &[Vec<f64>]) -> EmbeddingMatrix {
        let rows: Vec<Vec<f64>> = (0..ids.len())
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect();
        EmbeddingMatrix::new(
            ids.iter().map(|s| s.to_string()).collect(),
            rows,
            vec![None; ids.len()],
        )
        .unwrap()
    }

    fn manual(ids: &[&str], cols: &[Vec<f64>]) -> ManualFeatureMatrix {
        let rows: Vec<Vec<f64>> = (0..ids.len())
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect();
        ManualFeatureMatrix::new(
            ids.iter().map(|s| s.to_string()).collect(),
            (0..cols.len()).map(|f| format!("f{f}")).collect(),
            rows,
        )
        .unwrap()
    }

    /// Exhaustive oracle: try all d^F feature-to-dimension assignments.
    pub(crate) fn qvec_exhaustive(embeddings: &EmbeddingMatrix, manual: &ManualFeatureMatrix) -> f64 {
        let shared: Vec<(usize, usize)> = manual
            .scribe_ids
            .iter()
            .enumerate()
            .filter_map(|(mi, id)| {
                embeddings.ids.iter().position(|e| e == id).map(|ei| (ei, mi))
            })
            .collect();
        let d = embeddings.dim();
        let f_count = manual.feature_count();
        let corr = |f: usize, e: usize| {
            let a: Vec<f64> = shared.iter().map(|&(_, mi)| manual.rows[mi][f]).collect();
            let b: Vec<f64> = shared.iter().map(|&(ei, _)| embeddings.rows[ei][e]).collect();
            pearson(&a, &b)
        };
        let mut best = f64::NEG_INFINITY;
        let mut assignment = vec![0usize; f_count];
        loop {
            let total: f64 = (0..f_count).map(|f| corr(f, assignment[f])).sum();
            best = best.max(total);
            // next assignment in base-d counting
            let mut pos = 0;
            loop {
                if pos == f_count {
                    return best;
                }
                assignment[pos] += 1;
                if assignment[pos] < d {
                    break;
                }
                assignment[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn self_comparison_scores_exactly_f() {
        let ids = ["h1", "h2", "h3", "h4"];
        let cols = vec![
            vec![0.1, 0.4, -0.2, 0.9],
            vec![1.0, -1.0, 0.5, 0.25],
            vec![3.0, 1.0, 4.0, 1.5],
        ];
        let e = embeddings(&ids, &cols);
        let m = manual(&ids, &cols);
        let result = qvec(&e, &m).unwrap();
        assert_eq!(result.score, 3.0);
        for (f, (_, dim, r)) in result.assignments.iter().enumerate() {
            assert_eq!(*dim, f);
            assert_eq!(*r, 1.0);
        }
    }

    #[test]
    fn hand_built_two_by_two_row_maxima() {
        // 3 scribes; manual f0 == emb dim0 (r=1), manual f1 == -dim1 (r=-1
        // against dim1, r=0-ish against dim0? compute: f1 vs dim0 corr).
        let ids = ["a", "b", "c"];
        let e = embeddings(&ids, &[vec![1.0, 2.0, 3.0], vec![1.0, 0.0, -1.0]]);
        let m = manual(&ids, &[vec![1.0, 2.0, 3.0], vec![2.0, 1.0, 0.0]]);
        let result = qvec(&e, &m).unwrap();
        // f0: corr 1 with dim0; f1 = [2,1,0] decreasing = -dim0 direction
        // and +?? vs dim1 = [1,0,-1]: also perfectly anticorrelated with
        // dim0 but perfectly correlated with... f1 vs dim1: both decreasing
        // -> r = +1.
        assert!((result.score - 2.0).abs() < 1e-12, "score {}", result.score);
        let brute = qvec_exhaustive(&e, &m);
        assert!((result.score - brute).abs() < 1e-12);
    }

    #[test]
    fn negated_feature_contributes_zero_not_minus_one() {
        // Feature equals the negation of dim0; dim1 is constant (r = 0 by
        // convention). The max picks 0 over -1.
        let ids = ["a", "b", "c"];
        let e = embeddings(&ids, &[vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]]);
        let m = manual(&ids, &[vec![-1.0, -2.0, -3.0]]);
        let result = qvec(&e, &m).unwrap();
        assert_eq!(result.score, 0.0);
        assert_eq!(result.assignments[0].1, 1);
    }

    #[test]
    fn matches_exhaustive_oracle_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let m_count = rng.gen_range(2..=6);
            let d = rng.gen_range(1..=3);
            let f_count = rng.gen_range(1..=4);
            let ids: Vec<String> = (0..m_count).map(|i| format!("s{i}")).collect();
            let id_refs: Vec<&str> = ids.iter().map(|s| s.as_str()).collect();
            let emb_cols: Vec<Vec<f64>> = (0..d)
                .map(|_| (0..m_count).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let man_cols: Vec<Vec<f64>> = (0..f_count)
                .map(|_| (0..m_count).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let e = embeddings(&id_refs, &emb_cols);
            let m = manual(&id_refs, &man_cols);
            let fast = qvec(&e, &m).unwrap().score;
            let brute = qvec_exhaustive(&e, &m);
            assert!((fast - brute).abs() < 1e-9, "fast {fast} vs brute {brute}");
        }
    }

    #[test]
    fn positive_affine_rescaling_is_invariant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let ids = ["a", "b", "c", "d", "e"];
        let emb_cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let man_cols: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let e = embeddings(&ids, &emb_cols);
        let m = manual(&ids, &man_cols);
        let base = qvec(&e, &m).unwrap().score;

        let scaled_cols: Vec<Vec<f64>> = emb_cols
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let scale = 0.5 + i as f64;
                let shift = -2.0 + i as f64 * 3.0;
                c.iter().map(|v| scale * v + shift).collect()
            })
            .collect();
        let e2 = embeddings(&ids, &scaled_cols);
        let rescaled = qvec(&e2, &m).unwrap().score;
        assert!((base - rescaled).abs() < 1e-9, "{base} vs {rescaled}");
    }

    #[test]
    fn disjoint_and_tiny_intersections_error() {
        let e = embeddings(&["a", "b"], &[vec![1.0, 2.0]]);
        let m1 = manual(&["x", "y"], &[vec![1.0, 2.0]]);
        assert!(qvec(&e, &m1).is_err());
        let m2 = manual(&["a", "z"], &[vec![1.0, 2.0]]);
        assert!(qvec(&e, &m2).is_err());
    }

    #[test]
    fn intersection_respects_embedding_row_order() {
        // Manual lists scribes in a different order; scores must align pairs
        // by id, not by position.
        let e = embeddings(&["a", "b", "c"], &[vec![1.0, 2.0, 3.0]]);
        let m = manual(&["c", "a", "b"], &[vec![3.0, 1.0, 2.0]]);
        let result = qvec(&e, &m).unwrap();
        assert_eq!(result.score, 1.0);
        assert_eq!(result.shared_scribes, 3);
    }
}

//! Quantitative evaluation of scribe embeddings: findplace probing with
//! stratified cross-validation, the most-common-class baseline, many-to-one
//! correlation scoring against manual features, and the report emitter.

pub mod folds;
pub mod io;
pub mod metrics;
pub mod probe;
pub mod qvec;
pub mod report;

pub use folds::stratified_folds;
pub use metrics::macro_f1;
pub use probe::{baseline_most_common, probe_findplace, ProbeResult};
pub use qvec::{qvec, ManualFeatureMatrix, QvecResult};
pub use report::{emit_report, parse_report, render_report, ReportFragment, ReportHeader};

use crate::{GlyphError, Result};

use std::collections::BTreeMap;

/// Scribe embeddings with row labels and optional findplace metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub findplaces: Vec<Option<String>>,
}

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>, findplaces: Vec<Option<String>>) -> Result<EmbeddingMatrix> {
        if ids.len() != rows.len() || ids.len() != findplaces.len() {
            return Err(GlyphError::Eval(format!(
                "misaligned embedding matrix: {} ids, {} rows, {} findplaces",
                ids.len(),
                rows.len(),
                findplaces.len()
            )));
        }
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(GlyphError::Eval(format!(
                    "embedding row {i} has {} dims, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(GlyphError::Eval(format!("embedding row {i} ({}) is not finite", ids[i])));
            }
        }
        Ok(EmbeddingMatrix { ids, rows, findplaces })
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Findplace labels for every row, failing on rows that lack one.
    pub fn findplace_labels(&self) -> Result<Vec<String>> {
        self.findplaces
            .iter()
            .enumerate()
            .map(|(i, f)| {
                f.clone().ok_or_else(|| {
                    GlyphError::Eval(format!("scribe {} has no findplace label", self.ids[i]))
                })
            })
            .collect()
    }
}

/// Probe preprocessing rule: drop scribes without a findplace, then drop
/// every findplace attested by 2 or fewer of the remaining scribes. Fails if
/// fewer than 2 findplace classes survive.
pub fn filter_findplaces(embeddings: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for fp in embeddings.findplaces.iter().flatten() {
        *counts.entry(fp.as_str()).or_default() += 1;
    }
    let kept: Vec<usize> = (0..embeddings.len())
        .filter(|&i| {
            embeddings.findplaces[i]
                .as_deref()
                .map(|fp| counts[fp] > 2)
                .unwrap_or(false)
        })
        .collect();
    let classes: std::collections::BTreeSet<&str> = kept
        .iter()
        .filter_map(|&i| embeddings.findplaces[i].as_deref())
        .collect();
    if classes.len() < 2 {
        return Err(GlyphError::Eval(format!(
            "only {} findplace class(es) remain after excluding findplaces with <= 2 scribes",
            classes.len()
        )));
    }
    EmbeddingMatrix::new(
        kept.iter().map(|&i| embeddings.ids[i].clone()).collect(),
        kept.iter().map(|&i| embeddings.rows[i].clone()).collect(),
        kept.iter().map(|&i| embeddings.findplaces[i].clone()).collect(),
    )
}

use crate::{GlyphError, Result};

use super::manifest::CorpusManifest;

/// Corpus summary: totals plus per-scribe and per-sign means, reported both
/// rounded to the nearest integer and as exact reduced rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusStats {
    pub total: usize,
    pub sign_count: usize,
    pub scribe_count: usize,
    pub glyphs_per_scribe_rounded: u64,
    pub glyphs_per_scribe_exact: (u64, u64),
    pub occurrences_per_sign_rounded: u64,
    pub occurrences_per_sign_exact: (u64, u64),
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn ratio(num: u64, den: u64) -> (u64, u64) {
    let g = gcd(num, den).max(1);
    (num / g, den / g)
}

fn round_ratio(num: u64, den: u64) -> u64 {
    (num as f64 / den as f64).round() as u64
}

pub fn corpus_stats(manifest: &CorpusManifest) -> Result<CorpusStats> {
    let total = manifest.records.len();
    if total == 0 {
        return Err(GlyphError::Invalid("empty corpus".into()));
    }
    let j = manifest.sign_count();
    let k = manifest.scribe_count();
    Ok(CorpusStats {
        total,
        sign_count: j,
        scribe_count: k,
        glyphs_per_scribe_rounded: round_ratio(total as u64, k as u64),
        glyphs_per_scribe_exact: ratio(total as u64, k as u64),
        occurrences_per_sign_rounded: round_ratio(total as u64, j as u64),
        occurrences_per_sign_exact: ratio(total as u64, j as u64),
    })
}

impl std::fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "images: {}", self.total)?;
        writeln!(f, "signs (J): {}", self.sign_count)?;
        writeln!(f, "scribes (K): {}", self.scribe_count)?;
        writeln!(
            f,
            "mean glyphs per scribe: {} ({}/{})",
            self.glyphs_per_scribe_rounded, self.glyphs_per_scribe_exact.0, self.glyphs_per_scribe_exact.1
        )?;
        write!(
            f,
            "mean occurrences per sign: {} ({}/{})",
            self.occurrences_per_sign_rounded, self.occurrences_per_sign_exact.0, self.occurrences_per_sign_exact.1
        )
    }
}

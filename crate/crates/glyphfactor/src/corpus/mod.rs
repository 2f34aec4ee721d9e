//! Corpus loading, validation, and preprocessing: manifest CSV parsing with
//! dense id assignment, Otsu binarization, and the resize/center/threshold
//! pipeline producing model-ready 64x64 binary glyphs.

pub mod image;
pub mod manifest;
pub mod otsu;
pub mod preprocess;
pub mod stats;

pub use image::{read_glyph_pgm, read_gray_image, write_glyph_pgm, GlyphImage, GrayImage, GLYPH_SIZE};
pub use manifest::{load_manifest, write_manifest, CorpusManifest, CorpusRecord, MANIFEST_HEADER};
pub use otsu::otsu_threshold;
pub use preprocess::preprocess;
pub use stats::{corpus_stats, CorpusStats};

use sha2::{Digest, Sha256};

use crate::{GlyphError, Result};

/// SHA-256 over the manifest rows and image bytes in record order; stamps
/// checkpoints and reports so runs can be traced back to their inputs.
pub fn corpus_hash(manifest: &CorpusManifest) -> Result<String> {
    let mut hasher = Sha256::new();
    for record in &manifest.records {
        hasher.update(record.glyph_id.as_bytes());
        hasher.update([0u8]);
        hasher.update(record.sign_label.as_bytes());
        hasher.update([0u8]);
        hasher.update(record.scribe_label.as_bytes());
        hasher.update([0u8]);
        hasher.update(record.findplace.as_deref().unwrap_or("").as_bytes());
        hasher.update([0u8]);
        let path = manifest.image_abs_path(record);
        let bytes = std::fs::read(&path).map_err(|e| GlyphError::io(&path, e))?;
        hasher.update(&bytes);
        hasher.update([0u8]);
    }
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

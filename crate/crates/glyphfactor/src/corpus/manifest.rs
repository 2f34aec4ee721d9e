use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use crate::{GlyphError, Result};

use super::image::{read_glyph_pgm, GlyphImage};

pub const MANIFEST_HEADER: [&str; 5] = ["glyph_id", "sign", "scribe", "findplace", "image_path"];

/// One glyph instance: labels plus the (manifest-relative) image location.
/// Dense integer ids are assigned in first-appearance order of the string
/// labels, so every id below J (resp. K) occurs in the corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusRecord {
    pub glyph_id: String,
    pub sign_label: String,
    pub scribe_label: String,
    pub findplace: Option<String>,
    pub image_path: PathBuf,
    pub sign_id: usize,
    pub scribe_id: usize,
}

#[derive(Clone, Debug)]
pub struct CorpusManifest {
    pub records: Vec<CorpusRecord>,
    pub sign_labels: Vec<String>,
    pub scribe_labels: Vec<String>,
    /// Directory image paths are resolved against.
    pub base_dir: PathBuf,
    /// Free-form origin note (the manifest path on load).
    pub source: String,
}

impl CorpusManifest {
    pub fn sign_count(&self) -> usize {
        self.sign_labels.len()
    }

    pub fn scribe_count(&self) -> usize {
        self.scribe_labels.len()
    }

    pub fn image_abs_path(&self, record: &CorpusRecord) -> PathBuf {
        self.base_dir.join(&record.image_path)
    }

    /// Load every referenced image as a preprocessed binary glyph.
    pub fn load_glyphs(&self) -> Result<Vec<GlyphImage>> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                read_glyph_pgm(&self.image_abs_path(r)).map_err(|e| GlyphError::Manifest {
                    row: i + 1,
                    message: e.to_string(),
                })
            })
            .collect()
    }

    /// Findplace per scribe id, from the manifest column. A scribe listed
    /// with two different findplaces is a validation error.
    pub fn scribe_findplaces(&self) -> Result<Vec<Option<String>>> {
        let mut out: Vec<Option<String>> = vec![None; self.scribe_count()];
        for (i, r) in self.records.iter().enumerate() {
            if let Some(fp) = &r.findplace {
                match &out[r.scribe_id] {
                    None => out[r.scribe_id] = Some(fp.clone()),
                    Some(existing) if existing == fp => {}
                    Some(existing) => {
                        return Err(GlyphError::Manifest {
                            row: i + 1,
                            message: format!(
                                "scribe {} has conflicting findplaces {existing:?} and {fp:?}",
                                r.scribe_label
                            ),
                        })
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Interner assigning dense ids in first-appearance order.
#[derive(Default)]
struct LabelInterner {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelInterner {
    fn intern(&mut self, label: &str) -> usize {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }
}

/// Parse and validate a corpus manifest CSV. Checks the exact header, the
/// column count of every row, glyph-id uniqueness, and that every referenced
/// image file exists.
pub fn load_manifest(path: &Path) -> Result<CorpusManifest> {
    let file = File::open(path).map_err(|e| GlyphError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let headers = reader
        .headers()
        .map_err(|e| GlyphError::Manifest { row: 0, message: e.to_string() })?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != MANIFEST_HEADER {
        return Err(GlyphError::Manifest {
            row: 0,
            message: format!(
                "header must be exactly {:?}, got {:?}",
                MANIFEST_HEADER.join(","),
                got.join(",")
            ),
        });
    }

    let base_dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    let mut signs = LabelInterner::default();
    let mut scribes = LabelInterner::default();
    let mut seen_ids: HashMap<String, usize> = HashMap::new();
    let mut records = Vec::new();

    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| GlyphError::Manifest { row: row_no, message: e.to_string() })?;
        if row.len() != 5 {
            return Err(GlyphError::Manifest {
                row: row_no,
                message: format!("expected 5 columns, got {}", row.len()),
            });
        }
        let glyph_id = row[0].to_string();
        if glyph_id.is_empty() {
            return Err(GlyphError::Manifest { row: row_no, message: "empty glyph_id".into() });
        }
        if let Some(prev) = seen_ids.insert(glyph_id.clone(), row_no) {
            return Err(GlyphError::Manifest {
                row: row_no,
                message: format!("duplicate glyph_id {glyph_id:?} (first seen at row {prev})"),
            });
        }
        let image_path = PathBuf::from(&row[4]);
        let abs = base_dir.join(&image_path);
        if !abs.is_file() {
            return Err(GlyphError::Manifest {
                row: row_no,
                message: format!("referenced image {} does not exist", abs.display()),
            });
        }
        let findplace = if row[3].is_empty() { None } else { Some(row[3].to_string()) };
        let sign_id = signs.intern(&row[1]);
        let scribe_id = scribes.intern(&row[2]);
        records.push(CorpusRecord {
            glyph_id,
            sign_label: row[1].to_string(),
            scribe_label: row[2].to_string(),
            findplace,
            image_path,
            sign_id,
            scribe_id,
        });
    }

    Ok(CorpusManifest {
        records,
        sign_labels: signs.labels,
        scribe_labels: scribes.labels,
        base_dir,
        source: path.display().to_string(),
    })
}

/// Write a manifest back to CSV in the documented column order.
pub fn write_manifest(manifest: &CorpusManifest, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| GlyphError::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    writer
        .write_record(MANIFEST_HEADER)
        .map_err(|e| GlyphError::Manifest { row: 0, message: e.to_string() })?;
    for (i, r) in manifest.records.iter().enumerate() {
        writer
            .write_record([
                r.glyph_id.as_str(),
                r.sign_label.as_str(),
                r.scribe_label.as_str(),
                r.findplace.as_deref().unwrap_or(""),
                &r.image_path.to_string_lossy(),
            ])
            .map_err(|e| GlyphError::Manifest { row: i + 1, message: e.to_string() })?;
    }
    writer
        .flush()
        .map_err(|e| GlyphError::io(path, e))
}

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use crate::{GlyphError, Result};

use super::qvec::ManualFeatureMatrix;
use super::EmbeddingMatrix;

/// Read an embedding export (header `id,label,dim_0,...`). Findplaces start
/// unset; attach them from a metadata source afterwards.
pub fn read_embeddings_csv(path: &Path) -> Result<EmbeddingMatrix> {
    let file = File::open(path).map_err(|e| GlyphError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| GlyphError::Eval(e.to_string()))?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 3 || cols[0] != "id" || cols[1] != "label" || !cols[2..].iter().enumerate().all(|(i, c)| *c == format!("dim_{i}")) {
        return Err(GlyphError::Eval(format!(
            "{}: embedding CSV header must be id,label,dim_0,...",
            path.display()
        )));
    }
    let dim = cols.len() - 2;
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| GlyphError::Eval(format!("row {}: {e}", i + 1)))?;
        if row.len() != dim + 2 {
            return Err(GlyphError::Eval(format!(
                "{}: row {} has {} columns, expected {}",
                path.display(),
                i + 1,
                row.len(),
                dim + 2
            )));
        }
        ids.push(row[1].to_string());
        let mut values = Vec::with_capacity(dim);
        for c in 2..row.len() {
            values.push(row[c].parse::<f64>().map_err(|_| {
                GlyphError::Eval(format!("{}: row {} column {c}: bad number {:?}", path.display(), i + 1, &row[c]))
            })?);
        }
        rows.push(values);
    }
    let n = ids.len();
    EmbeddingMatrix::new(ids, rows, vec![None; n])
}

/// `scribe,findplace` metadata CSV.
pub fn read_findplaces_csv(path: &Path) -> Result<BTreeMap<String, String>> {
    let file = File::open(path).map_err(|e| GlyphError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let headers = reader.headers().map_err(|e| GlyphError::Eval(e.to_string()))?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols != ["scribe", "findplace"] {
        return Err(GlyphError::Eval(format!(
            "{}: findplace CSV header must be scribe,findplace",
            path.display()
        )));
    }
    let mut map = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| GlyphError::Eval(format!("row {}: {e}", i + 1)))?;
        if row.len() != 2 {
            return Err(GlyphError::Eval(format!("row {} has {} columns, expected 2", i + 1, row.len())));
        }
        if !row[1].is_empty() {
            map.insert(row[0].to_string(), row[1].to_string());
        }
    }
    Ok(map)
}

/// Attach findplace labels to embedding rows by scribe label.
pub fn attach_findplaces(embeddings: &mut EmbeddingMatrix, findplaces: &BTreeMap<String, String>) {
    for (i, id) in embeddings.ids.iter().enumerate() {
        embeddings.findplaces[i] = findplaces.get(id).cloned();
    }
}

/// Manual feature CSV: header `scribe,<feature_1>,...`; all cells numeric,
/// rows with blanks rejected with their row number.
pub fn read_manual_features_csv(path: &Path) -> Result<ManualFeatureMatrix> {
    let file = File::open(path).map_err(|e| GlyphError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let headers = reader.headers().map_err(|e| GlyphError::Eval(e.to_string()))?.clone();
    let cols: Vec<String> = headers.iter().map(|s| s.to_string()).collect();
    if cols.len() < 2 || cols[0] != "scribe" {
        return Err(GlyphError::Eval(format!(
            "{}: manual feature CSV header must be scribe,<feature names>",
            path.display()
        )));
    }
    let feature_names = cols[1..].to_vec();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| GlyphError::Eval(format!("row {}: {e}", i + 1)))?;
        if row.len() != cols.len() {
            return Err(GlyphError::Eval(format!(
                "row {} has {} columns, expected {}",
                i + 1,
                row.len(),
                cols.len()
            )));
        }
        let mut values = Vec::with_capacity(feature_names.len());
        for c in 1..row.len() {
            if row[c].trim().is_empty() {
                return Err(GlyphError::Eval(format!(
                    "{}: row {} has a missing value in column {:?}",
                    path.display(),
                    i + 1,
                    cols[c]
                )));
            }
            values.push(row[c].parse::<f64>().map_err(|_| {
                GlyphError::Eval(format!("{}: row {}: bad number {:?}", path.display(), i + 1, &row[c]))
            })?);
        }
        ids.push(row[0].to_string());
        rows.push(values);
    }
    ManualFeatureMatrix::new(ids, feature_names, rows)
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::nncore::Tensor;
use crate::{GlyphError, Result};

use super::train::TrainConfig;

/// Embedding table as CSV: `id,label,dim_0,...,dim_{d-1}`. Values use the
/// shortest round-trip float formatting.
pub fn embeddings_to_csv(table: &Tensor, labels: &[String]) -> Result<String> {
    let (n, d) = table.dims2()?;
    if n != labels.len() {
        return Err(GlyphError::shape(
            "embeddings_to_csv",
            format!("{} labels", n),
            format!("{}", labels.len()),
        ));
    }
    let mut out = String::from("id,label");
    for i in 0..d {
        out.push_str(&format!(",dim_{i}"));
    }
    out.push('\n');
    for (id, label) in labels.iter().enumerate() {
        out.push_str(&format!("{id},{label}"));
        for v in table.row(id) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Checkpoint sidecar: everything needed to rebuild the model and trace the
/// run, stored as TOML next to the binary checkpoint.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelMeta {
    /// "factored" or "autoencoder".
    pub kind: String,
    pub sign_count: usize,
    pub scribe_count: usize,
    pub corpus_hash: String,
    pub sign_labels: Vec<String>,
    pub scribe_labels: Vec<String>,
    pub train_config: TrainConfig,
}

impl ModelMeta {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self)
            .map_err(|e| GlyphError::Invalid(format!("serializing model metadata: {e}")))?;
        std::fs::write(path, text).map_err(|e| GlyphError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<ModelMeta> {
        let text = std::fs::read_to_string(path).map_err(|e| GlyphError::io(path, e))?;
        toml::from_str(&text).map_err(|e| GlyphError::Config(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_csv_has_header_and_roundtrip_floats() {
        let table = Tensor::from_vec(&[2, 3], vec![0.1, -0.25, 1.0 / 3.0, 0.0, 5e-17, 2.0]).unwrap();
        let labels = vec!["hand1".to_string(), "hand2".to_string()];
        let csv = embeddings_to_csv(&table, &labels).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "id,label,dim_0,dim_1,dim_2");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "0");
        assert_eq!(row[1], "hand1");
        let third: f64 = row[4].parse().unwrap();
        assert_eq!(third, 1.0 / 3.0);
    }

    #[test]
    fn meta_round_trips_through_toml() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("meta.toml");
        let meta = ModelMeta {
            kind: "factored".into(),
            sign_count: 4,
            scribe_count: 3,
            corpus_hash: "abc123".into(),
            sign_labels: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            scribe_labels: vec!["h1".into(), "h2".into(), "h3".into()],
            train_config: TrainConfig::default(),
        };
        meta.save(&path).unwrap();
        let loaded = ModelMeta::load(&path).unwrap();
        assert_eq!(loaded.kind, "factored");
        assert_eq!(loaded.sign_count, 4);
        assert_eq!(loaded.train_config, TrainConfig::default());
    }
}

use std::collections::BTreeMap;
use std::path::Path;

use crate::{GlyphError, Result};

use super::probe::ProbeResult;
use super::qvec::QvecResult;

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Run provenance echoed at the top of every report.
#[derive(Clone, Debug, Default)]
pub struct ReportHeader {
    pub seed: u64,
    pub corpus_hash: String,
    pub config_echo: String,
}

/// One evaluated quantity, tagged with the model variant it describes.
#[derive(Clone, Debug)]
pub enum ReportFragment {
    Probe { model: String, result: ProbeResult },
    Qvec { model: String, result: QvecResult },
    MostCommon { f1: f64 },
}

/// Parsed-back numeric content of a report, for round-trip checks and
/// downstream tooling.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParsedReport {
    /// section-qualified scalar values, e.g. "probe full.mean_f1"
    pub values: BTreeMap<String, f64>,
    /// key -> list values, e.g. "probe full.fold_f1"
    pub lists: BTreeMap<String, Vec<f64>>,
    /// table rows: model -> (findplace F1, qvec score)
    pub table: BTreeMap<String, (Option<f64>, Option<f64>)>,
}

/// Render the structured-text report: key-value header, one section per
/// fragment, and a Table-1-shaped summary with one row per model variant
/// (columns: findplace probe F1 and the manual-feature similarity score).
pub fn render_report(header: &ReportHeader, fragments: &[ReportFragment]) -> Result<String> {
    if fragments.is_empty() {
        return Err(GlyphError::Eval("report needs at least one fragment".into()));
    }
    let mut out = String::new();
    out.push_str("glyphfactor evaluation report\n");
    out.push_str(&format!("format_version = {REPORT_FORMAT_VERSION}\n"));
    out.push_str(&format!("seed = {}\n", header.seed));
    out.push_str(&format!("corpus_hash = {}\n", header.corpus_hash));
    out.push_str(&format!("config = {}\n", header.config_echo));

    // rows: model -> (f1, qvec)
    let mut table: Vec<(String, (Option<f64>, Option<f64>))> = Vec::new();
    let mut upsert = |model: &str, f1: Option<f64>, qv: Option<f64>| {
        if let Some((_, entry)) = table.iter_mut().find(|(m, _)| m == model) {
            if f1.is_some() {
                entry.0 = f1;
            }
            if qv.is_some() {
                entry.1 = qv;
            }
        } else {
            table.push((model.to_string(), (f1, qv)));
        }
    };

    for fragment in fragments {
        match fragment {
            ReportFragment::Probe { model, result } => {
                out.push_str(&format!("\n[probe {model}]\n"));
                out.push_str(&format!("folds = {}\n", result.folds));
                out.push_str(&format!("inits = {}\n", result.inits));
                out.push_str(&format!("probe_seed = {}\n", result.seed));
                out.push_str(&format!(
                    "fold_f1 = {}\n",
                    result.fold_f1.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
                ));
                out.push_str(&format!(
                    "best_inits = {}\n",
                    result.best_inits.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
                ));
                out.push_str(&format!("mean_f1 = {}\n", result.mean_f1));
                upsert(model, Some(result.mean_f1), None);
            }
            ReportFragment::Qvec { model, result } => {
                out.push_str(&format!("\n[qvec {model}]\n"));
                out.push_str(&format!("shared_scribes = {}\n", result.shared_scribes));
                out.push_str(&format!("score = {}\n", result.score));
                upsert(model, None, Some(result.score));
            }
            ReportFragment::MostCommon { f1 } => {
                out.push_str("\n[most_common]\n");
                out.push_str(&format!("f1 = {f1}\n"));
                upsert("most_common", Some(*f1), None);
            }
        }
    }

    // move most_common to the top of the table when present
    if let Some(pos) = table.iter().position(|(m, _)| m == "most_common") {
        let row = table.remove(pos);
        table.insert(0, row);
    }

    out.push_str("\n[table]\n");
    let fmt_cell = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "-".to_string());
    let mut rows: Vec<[String; 3]> = vec![[
        "model".to_string(),
        "findplace_f1".to_string(),
        "qvec".to_string(),
    ]];
    for (model, (f1, qv)) in &table {
        rows.push([model.clone(), fmt_cell(f1), fmt_cell(qv)]);
    }
    let widths: [usize; 3] = [0, 1, 2].map(|c| rows.iter().map(|r| r[c].len()).max().unwrap());
    for row in rows {
        out.push_str(&format!(
            "{:<w0$}  {:<w1$}  {:<w2$}\n",
            row[0],
            row[1],
            row[2],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2]
        ));
    }
    Ok(out)
}

pub fn emit_report(header: &ReportHeader, fragments: &[ReportFragment], path: &Path) -> Result<()> {
    let text = render_report(header, fragments)?;
    std::fs::write(path, text).map_err(|e| GlyphError::io(path, e))
}

/// Parse the numbers back out of a rendered report.
pub fn parse_report(text: &str) -> Result<ParsedReport> {
    let mut parsed = ParsedReport::default();
    let mut section = String::new();
    let mut in_table = false;
    let mut table_header_seen = false;
    for line in text.lines() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.to_string();
            in_table = name == "table";
            table_header_seen = false;
            continue;
        }
        if in_table {
            let cells: Vec<&str> = line.split_whitespace().collect();
            if cells.len() != 3 {
                return Err(GlyphError::Eval(format!("bad table row: {line:?}")));
            }
            if !table_header_seen {
                table_header_seen = true;
                continue;
            }
            let parse_cell = |s: &str| -> Result<Option<f64>> {
                if s == "-" {
                    Ok(None)
                } else {
                    s.parse::<f64>()
                        .map(Some)
                        .map_err(|_| GlyphError::Eval(format!("bad table cell {s:?}")))
                }
            };
            parsed
                .table
                .insert(cells[0].to_string(), (parse_cell(cells[1])?, parse_cell(cells[2])?));
            continue;
        }
        if let Some((key, value)) = line.split_once(" = ") {
            let qualified = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if key == "fold_f1" || key == "best_inits" {
                let list: std::result::Result<Vec<f64>, _> =
                    value.split_whitespace().map(|v| v.parse::<f64>()).collect();
                if let Ok(list) = list {
                    parsed.lists.insert(qualified, list);
                }
            } else if let Ok(v) = value.parse::<f64>() {
                parsed.values.insert(qualified, v);
            }
        }
    }
    if parsed.values.is_empty() && parsed.table.is_empty() {
        return Err(GlyphError::Eval("not a glyphfactor report".into()));
    }
    Ok(parsed)
}

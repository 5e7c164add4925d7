//! File formats: vector sets (JSON or CSV), Gram matrices and zone lists.
//!
//! ```text
//! {"vectors": [[x, y, ...], ...]}
//! {"gram": [[1, h12, ...], ...]}
//! {"zones": [{"normal": [x, y, z], "width": w}, ...]}
//! ```
//!
//! CSV vector files hold one comma-separated vector per row, no header.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{PlankError, Result};
use crate::geom::{GramMatrix, Zone};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorFile {
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSpec {
    pub normal: [f64; 3],
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneFile {
    pub zones: Vec<ZoneSpec>,
}

/// Contents of an input file accepted by the pipeline commands.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Vectors(Vec<Vec<f64>>),
    Gram(Vec<Vec<f64>>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    vectors: Option<Vec<Vec<f64>>>,
    gram: Option<Vec<Vec<f64>>>,
}

/// Reads a vector or Gram file. JSON is detected by a leading `{`;
/// anything else is parsed as CSV vectors.
pub fn read_input(path: &Path) -> Result<Input> {
    let text = fs::read_to_string(path)?;
    parse_input(&text)
}

pub fn parse_input(text: &str) -> Result<Input> {
    if text.trim_start().starts_with('{') {
        let raw: RawInput =
            serde_json::from_str(text).map_err(|e| PlankError::Parse(e.to_string()))?;
        match (raw.vectors, raw.gram) {
            (Some(v), None) => Ok(Input::Vectors(v)),
            (None, Some(g)) => Ok(Input::Gram(g)),
            _ => Err(PlankError::Parse(
                "expected exactly one of \"vectors\" or \"gram\"".into(),
            )),
        }
    } else {
        parse_csv_vectors(text).map(Input::Vectors)
    }
}

/// Reads vectors only (rejects Gram files).
pub fn read_vectors(path: &Path) -> Result<Vec<Vec<f64>>> {
    match read_input(path)? {
        Input::Vectors(v) => Ok(v),
        Input::Gram(_) => Err(PlankError::Parse(format!(
            "{}: expected vectors, found a Gram matrix",
            path.display()
        ))),
    }
}

pub fn parse_csv_vectors(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| PlankError::Parse(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field.parse::<f64>().map_err(|e| {
                    PlankError::Parse(format!("line {line}, column {}: {field:?}: {e}", col + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(PlankError::Parse("no vectors found".into()));
    }
    Ok(rows)
}

pub fn gram_from_rows(rows: &[Vec<f64>]) -> Result<GramMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PlankError::NotGram("Gram matrix must be square".into()));
    }
    GramMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn read_zones(path: &Path) -> Result<Vec<Zone>> {
    let text = fs::read_to_string(path)?;
    let file: ZoneFile =
        serde_json::from_str(&text).map_err(|e| PlankError::Parse(e.to_string()))?;
    file.zones
        .iter()
        .map(|z| Zone::new(z.normal, z.width))
        .collect()
}

pub fn vector_file_json(rows: &[Vec<f64>]) -> String {
    let file = VectorFile {
        vectors: rows.to_vec(),
    };
    serde_json::to_string_pretty(&file).expect("vector file serializes")
}

pub(crate) fn ser_dvector<S: Serializer>(v: &DVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

pub(crate) fn ser_dmatrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(m.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()))
}

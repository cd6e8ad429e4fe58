//! Transfer functions with hand-derived grades and margins.
//!
//! A corpus file is a JSON array of entries
//! `{"id", "num", "den", "grade", "d"?, "d0"?, "d1"?, "notes"?}` with
//! ascending-power coefficients.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ratfun::RationalFunction;
use crate::realness::{classify_pr, FrequencyGrid, Grade};

/// The seed corpus shipped with the crate.
pub const SEED_CORPUS: &str = include_str!("../data/corpus.json");

/// Margins agree when `|got - expected| <= MARGIN_RTOL |expected| + MARGIN_ATOL`.
pub const MARGIN_RTOL: f64 = 1e-6;
pub const MARGIN_ATOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema error in entry {id:?}, field {field}: {msg}")]
    Schema {
        id: String,
        field: String,
        msg: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub plant: RationalFunction,
    pub expected_grade: Grade,
    pub d: Option<f64>,
    pub d0: Option<f64>,
    pub d1: Option<f64>,
    pub notes: String,
}

fn schema(id: &str, field: &str, msg: impl Into<String>) -> CorpusError {
    CorpusError::Schema {
        id: id.to_string(),
        field: field.to_string(),
        msg: msg.into(),
    }
}

fn coeffs(
    obj: &serde_json::Map<String, Value>,
    id: &str,
    field: &str,
) -> Result<Vec<f64>, CorpusError> {
    let arr = obj
        .get(field)
        .ok_or_else(|| schema(id, field, "missing"))?
        .as_array()
        .ok_or_else(|| schema(id, field, "expected an array of numbers"))?;
    arr.iter()
        .map(|v| {
            v.as_f64()
                .ok_or_else(|| schema(id, field, "expected an array of numbers"))
        })
        .collect()
}

fn margin(
    obj: &serde_json::Map<String, Value>,
    id: &str,
    field: &str,
) -> Result<Option<f64>, CorpusError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => {
            let x = v
                .as_f64()
                .ok_or_else(|| schema(id, field, "expected a number"))?;
            if x < 0.0 {
                return Err(schema(id, field, "margins are nonnegative"));
            }
            Ok(Some(x))
        }
    }
}

fn parse_entry(index: usize, value: &Value) -> Result<CorpusEntry, CorpusError> {
    let fallback = format!("#{index}");
    let obj = value
        .as_object()
        .ok_or_else(|| schema(&fallback, "entry", "expected an object"))?;
    let id = match obj.get("id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        _ => return Err(schema(&fallback, "id", "expected a non-empty string")),
    };
    const KNOWN: [&str; 8] = ["id", "num", "den", "grade", "d", "d0", "d1", "notes"];
    if let Some(extra) = obj.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(schema(&id, extra, "unknown field"));
    }
    let num = coeffs(obj, &id, "num")?;
    let den = coeffs(obj, &id, "den")?;
    let plant =
        RationalFunction::new(&num, &den).map_err(|e| schema(&id, "num/den", e.to_string()))?;
    let expected_grade = obj
        .get("grade")
        .and_then(Value::as_str)
        .and_then(Grade::parse)
        .ok_or_else(|| schema(&id, "grade", "expected one of NotPR, PR, WSPR, SSPR"))?;
    let notes = match obj.get("notes") {
        None => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(schema(&id, "notes", "expected a string")),
    };
    Ok(CorpusEntry {
        d: margin(obj, &id, "d")?,
        d0: margin(obj, &id, "d0")?,
        d1: margin(obj, &id, "d1")?,
        id,
        plant,
        expected_grade,
        notes,
    })
}

pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let value: Value = serde_json::from_str(text)?;
    let arr = value
        .as_array()
        .ok_or_else(|| schema("", "corpus", "expected a JSON array of entries"))?;
    let entries = arr
        .iter()
        .enumerate()
        .map(|(i, v)| parse_entry(i, v))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, e) in entries.iter().enumerate() {
        if entries[..i].iter().any(|p| p.id == e.id) {
            return Err(schema(&e.id, "id", "duplicate id"));
        }
    }
    Ok(entries)
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    parse_corpus(&std::fs::read_to_string(path)?)
}

pub fn seed_corpus() -> Vec<CorpusEntry> {
    parse_corpus(SEED_CORPUS).expect("seed corpus is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub id: String,
    pub field: String,
    pub expected: String,
    pub got: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRow {
    pub id: String,
    pub expected_grade: Grade,
    pub grade: Grade,
    pub d: f64,
    pub d0: f64,
    pub d1: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusReport {
    pub rows: Vec<CorpusRow>,
    pub mismatches: Vec<Mismatch>,
}

impl CorpusReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }
}

pub fn margin_matches(got: f64, expected: f64) -> bool {
    (got - expected).abs() <= MARGIN_RTOL * expected.abs() + MARGIN_ATOL
}

pub fn corpus_check(entries: &[CorpusEntry], grid: &FrequencyGrid) -> CorpusReport {
    let checked: Vec<(CorpusRow, Vec<Mismatch>)> = entries
        .par_iter()
        .map(|entry| {
            let c = classify_pr(&entry.plant, grid);
            let mut mismatches = Vec::new();
            if c.grade != entry.expected_grade {
                mismatches.push(Mismatch {
                    id: entry.id.clone(),
                    field: "grade".into(),
                    expected: entry.expected_grade.to_string(),
                    got: c.grade.to_string(),
                });
            }
            for (field, expected, got) in [
                ("d", entry.d, c.d),
                ("d0", entry.d0, c.d0),
                ("d1", entry.d1, c.d1),
            ] {
                if let Some(expected) = expected {
                    if !margin_matches(got, expected) {
                        mismatches.push(Mismatch {
                            id: entry.id.clone(),
                            field: field.into(),
                            expected: format!("{expected}"),
                            got: format!("{got}"),
                        });
                    }
                }
            }
            let row = CorpusRow {
                id: entry.id.clone(),
                expected_grade: entry.expected_grade,
                grade: c.grade,
                d: c.d,
                d0: c.d0,
                d1: c.d1,
                ok: mismatches.is_empty(),
            };
            (row, mismatches)
        })
        .collect();
    let mut report = CorpusReport::default();
    for (row, mismatches) in checked {
        report.rows.push(row);
        report.mismatches.extend(mismatches);
    }
    report
}

use super::{DataError, Tokenize};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Lower and upper bounds of a single prison term, in months.
pub const TERM_MIN: u32 = 1;
pub const TERM_MAX: u32 = 240;

/// One case as stored on disk: one JSON object per line, fact text raw.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawCase {
    pub id: String,
    pub fact: String,
    pub charges: Vec<String>,
    pub terms: Vec<u32>,
}

/// One validated case: tokenized fact, charges, and aligned gold terms.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRecord {
    pub id: String,
    pub fact: Vec<String>,
    pub charges: Vec<String>,
    pub terms: Vec<u32>,
}

impl CaseRecord {
    pub fn new(
        id: String,
        fact: Vec<String>,
        charges: Vec<String>,
        terms: Vec<u32>,
    ) -> Result<Self, DataError> {
        let reject = |reason: &str| -> Result<Self, DataError> {
            Err(DataError::InvalidRecord { id: id.clone(), reason: reason.to_string() })
        };
        if fact.is_empty() {
            return reject("empty fact");
        }
        if charges.is_empty() {
            return reject("no charges");
        }
        if charges.len() != terms.len() {
            return reject(&format!(
                "{} charges but {} terms",
                charges.len(),
                terms.len()
            ));
        }
        if let Some(&t) = terms.iter().find(|&&t| !(TERM_MIN..=TERM_MAX).contains(&t)) {
            return reject(&format!("term {t} outside [{TERM_MIN}, {TERM_MAX}]"));
        }
        Ok(Self { id, fact, charges, terms })
    }

    pub fn charge_count(&self) -> usize {
        self.charges.len()
    }

    /// Gold total term: the capped max/sum average of the per-charge gold
    /// terms, rounded to whole months. The dataset stores per-charge terms
    /// only, so the total-level gold is derived with the same combination
    /// rule used for predictions.
    pub fn gold_total(&self) -> u32 {
        let sum: f64 = self.terms.iter().map(|&t| t as f64).sum();
        let max = *self.terms.iter().max().expect("at least one term") as f64;
        let total = (TERM_MAX as f64).min((max + sum) / 2.0);
        total.round_ties_even() as u32
    }
}

impl RawCase {
    pub fn into_record(&self, tokenizer: &dyn Tokenize) -> Result<CaseRecord, DataError> {
        CaseRecord::new(
            self.id.clone(),
            tokenizer.tokenize(&self.fact),
            self.charges.clone(),
            self.terms.clone(),
        )
    }
}

/// Result of loading a dataset file: validated records plus one counted
/// reason per rejected line.
#[derive(Debug, Default)]
pub struct LoadOutcome {
    pub records: Vec<CaseRecord>,
    pub rejected: Vec<(String, String)>,
}

pub fn read_raw_cases(path: &Path) -> Result<Vec<RawCase>, DataError> {
    let text = fs::read_to_string(path)?;
    let mut cases = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let case: RawCase =
            serde_json::from_str(line).map_err(|source| DataError::Json { line: i + 1, source })?;
        cases.push(case);
    }
    Ok(cases)
}

/// Load and validate a JSON Lines dataset. Invalid cases are collected with
/// their rejection reason instead of failing the whole load.
pub fn load_records(path: &Path, tokenizer: &dyn Tokenize) -> Result<LoadOutcome, DataError> {
    let mut outcome = LoadOutcome::default();
    for raw in read_raw_cases(path)? {
        match raw.into_record(tokenizer) {
            Ok(record) => outcome.records.push(record),
            Err(DataError::InvalidRecord { id, reason }) => outcome.rejected.push((id, reason)),
            Err(other) => return Err(other),
        }
    }
    Ok(outcome)
}

pub fn write_jsonl(path: &Path, cases: &[RawCase]) -> Result<(), DataError> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for case in cases {
        serde_json::to_writer(&mut w, case).map_err(|source| DataError::Json { line: 0, source })?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Contiguous split by ratios; every case lands in exactly one split.
pub fn split_by_ratio<T: Clone>(items: &[T], ratios: (f64, f64, f64)) -> (Vec<T>, Vec<T>, Vec<T>) {
    let n = items.len();
    let n_train = (n as f64 * ratios.0).round() as usize;
    let n_valid = (n as f64 * ratios.1).round() as usize;
    let n_train = n_train.min(n);
    let n_valid = n_valid.min(n - n_train);
    (
        items[..n_train].to_vec(),
        items[n_train..n_train + n_valid].to_vec(),
        items[n_train + n_valid..].to_vec(),
    )
}

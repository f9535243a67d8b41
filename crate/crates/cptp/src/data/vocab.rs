use super::{CaseRecord, DataError};
use std::collections::HashMap;
use std::fs;
use std::path::Path;

/// Reserved index for padding positions.
pub const PAD: usize = 0;
/// Reserved index for out-of-vocabulary tokens.
pub const UNK: usize = 1;

/// Token and charge-label index maps. Token indices start after the two
/// reserved slots and are dense and stable under save/load.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    token_index: HashMap<String, usize>,
    charges: Vec<String>,
    charge_index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Build from a corpus: tokens with frequency >= `min_count`, ordered by
    /// (frequency desc, token asc) after the reserved slots. Every charge
    /// label seen in the corpus enters the charge map, sorted by label.
    pub fn build(records: &[CaseRecord], min_count: usize) -> Result<Self, DataError> {
        assert!(min_count >= 1, "min_count must be at least 1");
        if records.is_empty() {
            return Err(DataError::EmptyCorpus);
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for record in records {
            for token in &record.fact {
                *counts.entry(token).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> =
            counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let tokens: Vec<String> = kept.into_iter().map(|(t, _)| t.to_string()).collect();

        let mut charges: Vec<String> = Vec::new();
        for record in records {
            for charge in &record.charges {
                if !charges.contains(charge) {
                    charges.push(charge.clone());
                }
            }
        }
        charges.sort();

        Ok(Self::from_parts(tokens, charges))
    }

    fn from_parts(tokens: Vec<String>, charges: Vec<String>) -> Self {
        let token_index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i + 2))
            .collect();
        let charge_index = charges
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        Self { tokens, token_index, charges, charge_index }
    }

    /// Total token-index space, reserved slots included.
    pub fn size(&self) -> usize {
        self.tokens.len() + 2
    }

    pub fn charge_count(&self) -> usize {
        self.charges.len()
    }

    pub fn token_id(&self, token: &str) -> usize {
        self.token_index.get(token).copied().unwrap_or(UNK)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.token_id(t)).collect()
    }

    pub fn charge_id(&self, label: &str) -> Result<usize, DataError> {
        self.charge_index
            .get(label)
            .copied()
            .ok_or_else(|| DataError::UnknownCharge(label.to_string()))
    }

    pub fn charge_label(&self, id: usize) -> &str {
        &self.charges[id]
    }

    pub fn charge_labels(&self) -> &[String] {
        &self.charges
    }

    /// Token file: one non-reserved token per line, in index order.
    pub fn save_tokens(&self, path: &Path) -> Result<(), DataError> {
        fs::write(path, self.tokens.join("\n") + "\n")?;
        Ok(())
    }

    /// Charge file: one label per line, line number = charge id.
    pub fn save_charges(&self, path: &Path) -> Result<(), DataError> {
        fs::write(path, self.charges.join("\n") + "\n")?;
        Ok(())
    }

    pub fn load(tokens_path: &Path, charges_path: &Path) -> Result<Self, DataError> {
        let read_lines = |path: &Path| -> Result<Vec<String>, DataError> {
            Ok(fs::read_to_string(path)?
                .lines()
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect())
        };
        let tokens = read_lines(tokens_path)?;
        let charges = read_lines(charges_path)?;
        if charges.is_empty() {
            return Err(DataError::BadVocabFile(format!(
                "{}: no charge labels",
                charges_path.display()
            )));
        }
        Ok(Self::from_parts(tokens, charges))
    }
}

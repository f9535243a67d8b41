//! Dataset model, judgment-record extraction, tokenization, vocabulary,
//! synthetic corpus generation, and batching.

mod batch;
mod extract;
mod record;
mod synth;
mod tokenize;
mod vocab;

pub use batch::{charge_instances, make_batches, total_instances, Batch, Instance};
pub use extract::{extract_record, ExtractionPatterns, Fragment, RejectReason};
pub use record::{load_records, read_raw_cases, split_by_ratio, write_jsonl, CaseRecord, LoadOutcome, RawCase};
pub use synth::{gen_synthetic, ChargeSpec, SynthCase, SynthSpec};
pub use tokenize::{Tokenize, WhitespaceTokenizer};
pub use vocab::{Vocabulary, PAD, UNK};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("case {id}: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("bad extraction pattern: {0}")]
    BadPattern(String),
    #[error("bad synthetic spec: {0}")]
    BadSpec(String),
    #[error("charge label '{0}' is not in the vocabulary")]
    UnknownCharge(String),
    #[error("bad vocabulary file: {0}")]
    BadVocabFile(String),
}

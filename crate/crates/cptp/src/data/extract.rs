use super::record::{TERM_MAX, TERM_MIN};
use super::DataError;
use regex::Regex;

/// Compiled judgment-sentence patterns. Each pattern must expose named
/// capture groups `charge` and `months`.
#[derive(Debug)]
pub struct ExtractionPatterns {
    regexes: Vec<Regex>,
}

/// One extracted (charge, term) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub charge: String,
    pub months: u32,
}

/// Why a judgment document was rejected as a whole.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectReason {
    /// A matched term falls outside the admissible range.
    OutOfRange { charge: String, months: u64 },
    /// The months capture was not a parseable positive integer.
    BadNumber { text: String },
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::OutOfRange { charge, months } => {
                write!(f, "out-of-range: {months} months for {charge}")
            }
            RejectReason::BadNumber { text } => write!(f, "bad-number: '{text}'"),
        }
    }
}

impl ExtractionPatterns {
    /// The built-in pattern matching the judgment template
    /// `... sentenced to N months imprisonment for CHARGE.`
    pub fn default_patterns() -> Self {
        Self::parse("sentenced to (?P<months>[0-9]+) months imprisonment for (?P<charge>[a-z][a-z_-]*)")
            .expect("built-in pattern compiles")
    }

    /// Parse a pattern file: one regex per line; blank lines and `#`
    /// comments are skipped.
    pub fn parse(text: &str) -> Result<Self, DataError> {
        let mut regexes = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let re = Regex::new(line)
                .map_err(|e| DataError::BadPattern(format!("line {}: {e}", lineno + 1)))?;
            let names: Vec<_> = re.capture_names().flatten().collect();
            if !names.contains(&"charge") || !names.contains(&"months") {
                return Err(DataError::BadPattern(format!(
                    "line {}: pattern must define named groups 'charge' and 'months'",
                    lineno + 1
                )));
            }
            regexes.push(re);
        }
        if regexes.is_empty() {
            return Err(DataError::BadPattern("no patterns given".into()));
        }
        Ok(Self { regexes })
    }
}

/// Extract all (charge, months) fragments from a judgment text, in document
/// order, keeping only non-overlapping matches (earlier starts win; on equal
/// starts the earlier pattern wins). Zero matches yield an empty list — the
/// caller decides whether to drop the case. A term outside the admissible
/// range rejects the whole document.
pub fn extract_record(
    text: &str,
    patterns: &ExtractionPatterns,
) -> Result<Vec<Fragment>, RejectReason> {
    let mut spans: Vec<(usize, usize, usize, Fragment)> = Vec::new();
    for (pat_rank, re) in patterns.regexes.iter().enumerate() {
        for caps in re.captures_iter(text) {
            let whole = caps.get(0).expect("match 0");
            let months_text = &caps["months"];
            let months: u64 = months_text
                .parse()
                .map_err(|_| RejectReason::BadNumber { text: months_text.to_string() })?;
            let charge = caps["charge"].to_string();
            if !(TERM_MIN as u64..=TERM_MAX as u64).contains(&months) {
                return Err(RejectReason::OutOfRange { charge, months });
            }
            spans.push((whole.start(), whole.end(), pat_rank, Fragment { charge, months: months as u32 }));
        }
    }
    spans.sort_by_key(|&(start, _, rank, _)| (start, rank));
    let mut fragments = Vec::new();
    let mut cursor = 0usize;
    for (start, end, _, fragment) in spans {
        if start >= cursor {
            fragments.push(fragment);
            cursor = end;
        }
    }
    Ok(fragments)
}

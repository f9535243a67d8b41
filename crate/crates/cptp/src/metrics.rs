//! Evaluation: bucketed score, exact match, and tolerance accuracy.
//!
//! The score metric buckets the log deviation `δ = |ln(y+1) − ln(ŷ+1)|`:
//! the first bucket whose threshold is at least δ determines the score, and
//! anything past the last threshold scores zero. Exact match compares the
//! prediction rounded to whole months against the integer gold term.
//! Acc@p accepts the raw prediction inside `[y(1−p), y(1+p)]`, inclusive.
//!
//! Reports aggregate micro-averaged percentages over all predictions; a
//! per-case (macro) variant is available for grouped pairs.

use crate::objective::{log_delta, ObjectiveError};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("score table invalid: {0}")]
    BadTable(String),
    #[error("evaluate requires at least one (gold, prediction) pair")]
    EmptyInput,
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Piecewise score over δ: ordered (threshold, score) buckets, 0 past the end.
///
/// Thresholds must increase strictly and scores must decrease strictly, so a
/// smaller deviation never scores worse.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    buckets: Vec<(f64, f64)>,
}

impl Default for ScoreTable {
    /// The five-bucket ladder used by the CAIL-style judged score.
    fn default() -> Self {
        Self {
            buckets: vec![(0.2, 1.0), (0.4, 0.8), (0.6, 0.6), (0.8, 0.4), (1.0, 0.2)],
        }
    }
}

impl ScoreTable {
    pub fn new(buckets: Vec<(f64, f64)>) -> Result<Self, MetricsError> {
        if buckets.is_empty() {
            return Err(MetricsError::BadTable("no buckets".into()));
        }
        for window in buckets.windows(2) {
            if window[1].0 <= window[0].0 {
                return Err(MetricsError::BadTable(format!(
                    "thresholds must increase strictly: {} then {}",
                    window[0].0, window[1].0
                )));
            }
            if window[1].1 >= window[0].1 {
                return Err(MetricsError::BadTable(format!(
                    "scores must decrease strictly: {} then {}",
                    window[0].1, window[1].1
                )));
            }
        }
        for &(t, s) in &buckets {
            if !t.is_finite() || t <= 0.0 {
                return Err(MetricsError::BadTable(format!("threshold {t} must be positive")));
            }
            if !(0.0..=1.0).contains(&s) {
                return Err(MetricsError::BadTable(format!("score {s} outside [0, 1]")));
            }
        }
        Ok(Self { buckets })
    }

    pub fn buckets(&self) -> &[(f64, f64)] {
        &self.buckets
    }

    /// Parse `threshold,score` lines, one bucket per line. Blank lines and
    /// `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, MetricsError> {
        let mut buckets = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (t, s) = line
                .split_once(',')
                .ok_or_else(|| MetricsError::BadTable(format!("line {}: expected threshold,score", lineno + 1)))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| MetricsError::BadTable(format!("line {}: {e}", lineno + 1)))
            };
            buckets.push((parse(t)?, parse(s)?));
        }
        Self::new(buckets)
    }

    fn score(&self, delta: f64) -> f64 {
        for &(threshold, score) in &self.buckets {
            if delta <= threshold {
                return score;
            }
        }
        0.0
    }
}

/// Score of one prediction under the table.
pub fn s_score(y: f64, yhat: f64, table: &ScoreTable) -> Result<f64, MetricsError> {
    Ok(table.score(log_delta(y, yhat)?))
}

/// Gold months are integers; the prediction is rounded to whole months
/// (ties to the even month) before comparing.
pub fn exact_match(y: u32, yhat: f64) -> bool {
    yhat.round_ties_even() == y as f64
}

/// Raw prediction within relative tolerance p of gold, inclusive both ends.
pub fn acc_at_p(y: u32, yhat: f64, p: f64) -> bool {
    let y = y as f64;
    y * (1.0 - p) <= yhat && yhat <= y * (1.0 + p)
}

/// Whether a report describes per-charge or total-term predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Charge,
    Total,
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Level::Charge => "charge",
            Level::Total => "total",
        })
    }
}

impl std::str::FromStr for Level {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "charge" => Ok(Level::Charge),
            "total" => Ok(Level::Total),
            other => Err(format!("unknown level '{other}' (expected charge|total)")),
        }
    }
}

/// Aggregated percentages over a prediction set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub level: Level,
    pub n: usize,
    /// mean bucket score × 100
    pub s: f64,
    /// exact-match rate × 100
    pub em: f64,
    /// (p, rate × 100) per requested tolerance, in request order
    pub acc: Vec<(f64, f64)>,
}

impl EvalReport {
    /// `name=value` lines, percentages with two decimals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "level={}", self.level);
        let _ = writeln!(out, "n={}", self.n);
        let _ = writeln!(out, "S={:.2}", self.s);
        let _ = writeln!(out, "EM={:.2}", self.em);
        for &(p, v) in &self.acc {
            let _ = writeln!(out, "Acc@{}={:.2}", trim_p(p), v);
        }
        out
    }

    /// Machine-readable rows: `level,metric,value,n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,metric,value,n\n");
        let _ = writeln!(out, "{},S,{:.2},{}", self.level, self.s, self.n);
        let _ = writeln!(out, "{},EM,{:.2},{}", self.level, self.em, self.n);
        for &(p, v) in &self.acc {
            let _ = writeln!(out, "{},Acc@{},{:.2},{}", self.level, trim_p(p), v, self.n);
        }
        out
    }

    /// Value of Acc@p if it was requested.
    pub fn acc_at(&self, p: f64) -> Option<f64> {
        self.acc.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }
}

fn trim_p(p: f64) -> String {
    format!("{p}")
}

/// Micro-averaged report: every (gold, prediction) pair counts once.
pub fn evaluate(
    pairs: &[(u32, f64)],
    table: &ScoreTable,
    ps: &[f64],
    level: Level,
) -> Result<EvalReport, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = pairs.len() as f64;
    let mut s_sum = 0.0;
    let mut em_count = 0usize;
    let mut acc_counts = vec![0usize; ps.len()];
    for &(y, yhat) in pairs {
        s_sum += s_score(y as f64, yhat, table)?;
        em_count += exact_match(y, yhat) as usize;
        for (slot, &p) in acc_counts.iter_mut().zip(ps) {
            *slot += acc_at_p(y, yhat, p) as usize;
        }
    }
    Ok(EvalReport {
        level,
        n: pairs.len(),
        s: 100.0 * s_sum / n,
        em: 100.0 * em_count as f64 / n,
        acc: ps
            .iter()
            .zip(acc_counts)
            .map(|(&p, c)| (p, 100.0 * c as f64 / n))
            .collect(),
    })
}

/// Macro-averaged report: each group (usually one case) is averaged first,
/// then groups are averaged with equal weight.
pub fn evaluate_grouped(
    groups: &[Vec<(u32, f64)>],
    table: &ScoreTable,
    ps: &[f64],
    level: Level,
) -> Result<EvalReport, MetricsError> {
    let groups: Vec<&Vec<(u32, f64)>> = groups.iter().filter(|g| !g.is_empty()).collect();
    if groups.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut s_mean = 0.0;
    let mut em_mean = 0.0;
    let mut acc_means = vec![0.0; ps.len()];
    let mut n = 0usize;
    for group in &groups {
        let report = evaluate(group, table, ps, level)?;
        s_mean += report.s;
        em_mean += report.em;
        for (slot, (_, v)) in acc_means.iter_mut().zip(&report.acc) {
            *slot += v;
        }
        n += group.len();
    }
    let g = groups.len() as f64;
    Ok(EvalReport {
        level,
        n,
        s: s_mean / g,
        em: em_mean / g,
        acc: ps.iter().zip(acc_means).map(|(&p, v)| (p, v / g)).collect(),
    })
}

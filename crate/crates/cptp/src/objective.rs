//! Training objective and total-term combination.
//!
//! Terms are compared on a log scale: `δ = |ln(y+1) − ln(ŷ+1)|` measures the
//! relative deviation between a gold and a predicted term. The training loss
//! applies a Huber penalty to δ (quadratic below the threshold, linear
//! above), which keeps the gradient with respect to the prediction bounded
//! by `a/(ŷ+1)` and so dampens outliers. Per-case losses sum over the case's
//! charges.
//!
//! The functions here come in two forms: plain `f64` versions for
//! evaluation, and graph builders that record the same computation on a
//! [`Graph`] so it can be differentiated during training.

use crate::autodiff::{DiffError, Graph, TensorId};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("negative term: y={y}, yhat={yhat} (terms are nonnegative months)")]
    NegativeTerm { y: f64, yhat: f64 },
    #[error("prediction count {predictions} does not match charge count {charges}")]
    CountMismatch { predictions: usize, charges: usize },
    #[error("total_term requires at least one prediction")]
    EmptyPredictions,
    #[error("huber threshold must be positive, got {0}")]
    BadThreshold(f64),
}

/// Huber threshold configuration. The natural log is fixed; only the
/// quadratic/linear switch point `a` varies.
#[derive(Debug, Clone, Copy)]
pub struct LossConfig {
    pub threshold: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { threshold: 1.0 }
    }
}

impl LossConfig {
    pub fn new(threshold: f64) -> Result<Self, ObjectiveError> {
        if threshold > 0.0 {
            Ok(Self { threshold })
        } else {
            Err(ObjectiveError::BadThreshold(threshold))
        }
    }
}

/// Cap applied to combined totals, in months.
#[derive(Debug, Clone, Copy)]
pub struct TermCap {
    pub months: f64,
}

impl Default for TermCap {
    fn default() -> Self {
        Self { months: 240.0 }
    }
}

/// Which penalty the trainer minimizes.
///
/// `LogHuber` is the default objective; the others exist for the
/// loss-comparison harness. `Huber`, `Mse` and `Mae` operate on raw months.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    LogHuber,
    Huber,
    Mse,
    Mae,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [LossKind::LogHuber, LossKind::Huber, LossKind::Mse, LossKind::Mae];

    pub fn label(self) -> &'static str {
        match self {
            LossKind::LogHuber => "lhl",
            LossKind::Huber => "hl",
            LossKind::Mse => "mse",
            LossKind::Mae => "mae",
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lhl" => Ok(LossKind::LogHuber),
            "hl" => Ok(LossKind::Huber),
            "mse" => Ok(LossKind::Mse),
            "mae" => Ok(LossKind::Mae),
            other => Err(format!("unknown loss '{other}' (expected lhl|hl|mse|mae)")),
        }
    }
}

/// `δ = |ln(y+1) − ln(ŷ+1)|`.
pub fn log_delta(y: f64, yhat: f64) -> Result<f64, ObjectiveError> {
    if y < 0.0 || yhat < 0.0 {
        return Err(ObjectiveError::NegativeTerm { y, yhat });
    }
    Ok((y.ln_1p() - yhat.ln_1p()).abs())
}

/// Huber penalty on a nonnegative deviation.
pub fn huber(delta: f64, config: &LossConfig) -> f64 {
    let a = config.threshold;
    if delta < a {
        0.5 * delta * delta
    } else {
        a * (delta - 0.5 * a)
    }
}

/// Per-case loss: sum of huber(log_delta) over the case's charges.
pub fn case_loss(golds: &[f64], predictions: &[f64], config: &LossConfig) -> Result<f64, ObjectiveError> {
    if golds.len() != predictions.len() {
        return Err(ObjectiveError::CountMismatch {
            predictions: predictions.len(),
            charges: golds.len(),
        });
    }
    let mut total = 0.0;
    for (&y, &yhat) in golds.iter().zip(predictions) {
        total += huber(log_delta(y, yhat)?, config);
    }
    Ok(total)
}

/// Combine per-charge predictions into a total term:
/// `min(cap, (max + sum) / 2)`.
pub fn total_term(predictions: &[f64], cap: TermCap) -> Result<f64, ObjectiveError> {
    if predictions.is_empty() {
        return Err(ObjectiveError::EmptyPredictions);
    }
    let sum: f64 = predictions.iter().sum();
    let max = predictions.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(cap.months.min((max + sum) / 2.0))
}

// ── Graph builders ───────────────────────────────────────────────────

/// |x| as relu(x) + relu(-x); the subgradient at 0 is 0.
fn abs_node(g: &mut Graph, x: TensorId) -> Result<TensorId, DiffError> {
    let pos = g.relu(x)?;
    let minus_one = g.scalar(-1.0)?;
    let neg_x = g.mul(x, minus_one)?;
    let neg = g.relu(neg_x)?;
    g.add(pos, neg)
}

/// Huber penalty of a signed scalar deviation node. The branch is resolved
/// eagerly from the forward value; both branches agree in value and slope at
/// the threshold, so the choice at the boundary is immaterial.
fn huber_node(g: &mut Graph, diff: TensorId, config: &LossConfig) -> Result<TensorId, DiffError> {
    let a = config.threshold;
    let delta = g.scalar_value(diff).abs();
    if delta < a {
        let sq = g.mul(diff, diff)?;
        let half = g.scalar(0.5)?;
        g.mul(sq, half)
    } else {
        let abs = abs_node(g, diff)?;
        let scale = g.scalar(a)?;
        let scaled = g.mul(abs, scale)?;
        let shift = g.scalar(-0.5 * a * a)?;
        g.add(scaled, shift)
    }
}

/// Record the chosen per-prediction loss against a gold term.
/// `yhat` must be a nonnegative scalar node.
pub fn loss_node(
    g: &mut Graph,
    yhat: TensorId,
    gold: f64,
    kind: LossKind,
    config: &LossConfig,
) -> Result<TensorId, DiffError> {
    match kind {
        LossKind::LogHuber => {
            let log_pred = g.log1p(yhat)?;
            let log_gold = g.scalar(gold.ln_1p())?;
            let diff = g.sub(log_gold, log_pred)?;
            huber_node(g, diff, config)
        }
        LossKind::Huber => {
            let gold_node = g.scalar(gold)?;
            let diff = g.sub(gold_node, yhat)?;
            huber_node(g, diff, config)
        }
        LossKind::Mse => {
            let gold_node = g.scalar(gold)?;
            let diff = g.sub(gold_node, yhat)?;
            g.mul(diff, diff)
        }
        LossKind::Mae => {
            let gold_node = g.scalar(gold)?;
            let diff = g.sub(gold_node, yhat)?;
            abs_node(g, diff)
        }
    }
}

/// Record the summed per-case loss over aligned prediction nodes and golds.
pub fn case_loss_node(
    g: &mut Graph,
    yhats: &[TensorId],
    golds: &[f64],
    kind: LossKind,
    config: &LossConfig,
) -> Result<TensorId, DiffError> {
    assert_eq!(yhats.len(), golds.len(), "prediction/gold count mismatch");
    let mut total: Option<TensorId> = None;
    for (&yhat, &gold) in yhats.iter().zip(golds) {
        let term = loss_node(g, yhat, gold, kind, config)?;
        total = Some(match total {
            None => term,
            Some(t) => g.add(t, term)?,
        });
    }
    Ok(total.expect("at least one prediction"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_delta_examples() {
        assert_eq!(log_delta(20.0, 20.0).unwrap(), 0.0);
        let yhat = 2.0 * 0.5_f64.exp() - 1.0;
        assert!((log_delta(1.0, yhat).unwrap() - 0.5).abs() < 1e-12);
        assert!((log_delta(3.0, 0.0).unwrap() - 4.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_delta_rejects_negative() {
        assert!(log_delta(-1.0, 0.0).is_err());
        assert!(log_delta(0.0, -0.1).is_err());
    }

    #[test]
    fn huber_examples() {
        let cfg = LossConfig::default();
        assert!((huber(0.5, &cfg) - 0.125).abs() < 1e-15);
        assert!((huber(1.0, &cfg) - 0.5).abs() < 1e-15);
        assert!((huber(2.0, &cfg) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn huber_continuous_at_threshold() {
        let cfg = LossConfig::default();
        let a = cfg.threshold;
        let below = 0.5 * a * a;
        let above = a * (a - 0.5 * a);
        assert!((below - above).abs() < 1e-15);
        assert!((huber(a - 1e-12, &cfg) - huber(a + 1e-12, &cfg)).abs() < 1e-11);
    }

    #[test]
    fn case_loss_sums_per_charge() {
        let cfg = LossConfig::default();
        // deltas 0.5 and 2 constructed exactly: pick pairs whose log gap is
        // the target delta.
        let y1 = 1.0;
        let p1 = 2.0 * 0.5_f64.exp() - 1.0; // delta 0.5
        let y2 = (2.0_f64).exp() - 1.0;
        let p2 = 0.0; // delta 2
        let loss = case_loss(&[y1, y2], &[p1, p2], &cfg).unwrap();
        assert!((loss - 1.625).abs() < 1e-12, "{loss}");
        assert_eq!(case_loss(&[10.0], &[10.0], &cfg).unwrap(), 0.0);
        let single = case_loss(&[9.0], &[4.0], &cfg).unwrap();
        assert!((single - huber(log_delta(9.0, 4.0).unwrap(), &cfg)).abs() < 1e-15);
    }

    #[test]
    fn case_loss_count_mismatch() {
        assert!(matches!(
            case_loss(&[1.0, 2.0], &[1.0], &LossConfig::default()),
            Err(ObjectiveError::CountMismatch { .. })
        ));
    }

    #[test]
    fn total_term_examples() {
        let cap = TermCap::default();
        assert_eq!(total_term(&[24.0], cap).unwrap(), 24.0);
        assert_eq!(total_term(&[36.0, 48.0], cap).unwrap(), 66.0);
        assert_eq!(total_term(&[200.0, 180.0], cap).unwrap(), 240.0);
        assert!(matches!(total_term(&[], cap), Err(ObjectiveError::EmptyPredictions)));
    }

    #[test]
    fn graph_loss_matches_pure_loss() {
        let cfg = LossConfig::default();
        for (y, yhat) in [(24.0, 30.0), (1.0, 180.0), (100.0, 99.5), (12.0, 12.0)] {
            let mut g = Graph::new();
            let pred = g.scalar(yhat).unwrap();
            let node = loss_node(&mut g, pred, y, LossKind::LogHuber, &cfg).unwrap();
            let pure = huber(log_delta(y, yhat).unwrap(), &cfg);
            assert!((g.scalar_value(node) - pure).abs() < 1e-12);
        }
    }

    #[test]
    fn graph_loss_gradient_bounded_by_threshold_over_term() {
        // |dL/dyhat| <= a / (yhat + 1) for the log Huber loss
        let cfg = LossConfig::default();
        for (y, yhat) in [(24.0, 3.0), (1.0, 200.0), (100.0, 90.0), (7.0, 0.0)] {
            let mut g = Graph::new();
            let pred = g.scalar(yhat).unwrap();
            let node = loss_node(&mut g, pred, y, LossKind::LogHuber, &cfg).unwrap();
            g.backward(node).unwrap();
            let grad = g.grad(pred).unwrap()[0];
            let bound = cfg.threshold / (yhat + 1.0);
            assert!(grad.abs() <= bound + 1e-12, "grad {grad} exceeds bound {bound}");
        }
    }

    #[test]
    fn graph_mse_mae_hl_match_definitions() {
        let cfg = LossConfig::default();
        let (y, yhat) = (24.0, 30.5);
        let eval = |kind: LossKind| {
            let mut g = Graph::new();
            let pred = g.scalar(yhat).unwrap();
            let node = loss_node(&mut g, pred, y, kind, &cfg).unwrap();
            g.scalar_value(node)
        };
        assert!((eval(LossKind::Mse) - (y - yhat) * (y - yhat)).abs() < 1e-12);
        assert!((eval(LossKind::Mae) - (y - yhat).abs()).abs() < 1e-12);
        assert!((eval(LossKind::Huber) - huber((y - yhat).abs(), &cfg)).abs() < 1e-12);
    }
}

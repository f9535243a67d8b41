use super::graph::DiffError;
use super::Result;

/// Outcome of a finite-difference check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// max over coordinates of |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
    pub max_rel_err: f64,
    /// coordinate where the maximum occurred
    pub worst_coord: usize,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
}

/// Compare the analytic gradient of a scalar function against central
/// differences, coordinate by coordinate.
///
/// `f` maps a parameter vector to (loss, gradient). It is evaluated twice at
/// the base point first; if the two losses differ bitwise, the function is
/// not deterministic and the check refuses to proceed.
pub fn grad_check<F>(mut f: F, theta: &[f64], eps: f64) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    assert!(eps > 0.0, "eps must be positive");
    let (loss_a, analytic) = f(theta)?;
    let (loss_b, _) = f(theta)?;
    if loss_a.to_bits() != loss_b.to_bits() {
        return Err(DiffError::NonDeterministic { first: loss_a, second: loss_b });
    }
    assert_eq!(analytic.len(), theta.len(), "gradient length must match parameter count");

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_coord: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
    };
    let mut probe = theta.to_vec();
    for i in 0..theta.len() {
        probe[i] = theta[i] + eps;
        let (plus, _) = f(&probe)?;
        probe[i] = theta[i] - eps;
        let (minus, _) = f(&probe)?;
        probe[i] = theta[i];

        let numeric = (plus - minus) / (2.0 * eps);
        let denom = (analytic[i].abs() + numeric.abs()).max(1e-8);
        let rel = (analytic[i] - numeric).abs() / denom;
        if rel > report.max_rel_err {
            report.max_rel_err = rel;
            report.worst_coord = i;
            report.worst_analytic = analytic[i];
            report.worst_numeric = numeric;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Graph;

    #[test]
    fn sum_of_squares() {
        let theta = vec![0.5, -1.5, 2.0];
        let f = |t: &[f64]| {
            let loss = t.iter().map(|v| v * v).sum::<f64>();
            let grad = t.iter().map(|v| 2.0 * v).collect();
            Ok((loss, grad))
        };
        let report = grad_check(f, &theta, 1e-5).unwrap();
        assert!(report.max_rel_err < 1e-6, "rel err {}", report.max_rel_err);
    }

    #[test]
    fn constant_function_has_zero_error() {
        let f = |t: &[f64]| Ok((7.0, vec![0.0; t.len()]));
        let report = grad_check(f, &[1.0, 2.0], 1e-4).unwrap();
        assert_eq!(report.max_rel_err, 0.0);
    }

    #[test]
    fn detects_non_determinism() {
        let mut calls = 0u32;
        let f = move |_: &[f64]| {
            calls += 1;
            Ok((calls as f64, vec![0.0]))
        };
        assert!(matches!(
            grad_check(f, &[1.0], 1e-4),
            Err(DiffError::NonDeterministic { .. })
        ));
    }

    #[test]
    fn graph_backward_agrees_on_composed_ops() {
        let theta = vec![0.4, -0.3, 0.9, 0.1, -0.8, 0.6];
        let f = |t: &[f64]| {
            let mut g = Graph::new();
            let x = g.leaf(t[..4].to_vec(), vec![2, 2])?;
            let w = g.leaf(t[4..].to_vec(), vec![2, 1])?;
            let h = g.matmul(x, w)?;
            let a = g.tanh(h)?;
            let s = g.sigmoid(a)?;
            let loss = g.sum(s)?;
            g.backward(loss)?;
            let mut grad = g.grad(x).unwrap().to_vec();
            grad.extend_from_slice(g.grad(w).unwrap());
            Ok((g.scalar_value(loss), grad))
        };
        let report = grad_check(f, &theta, 1e-5).unwrap();
        assert!(report.max_rel_err < 1e-7, "rel err {}", report.max_rel_err);
    }
}

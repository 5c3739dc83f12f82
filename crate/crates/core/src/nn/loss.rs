//! Margin loss: cross-entropy on the final softmax plus averaged hinge terms
//! on every early exit.

use super::{NetError, PredictionTrace, Result};

/// Floor applied to the target probability inside the log.
const MIN_PROB: f64 = 1e-300;

/// `-ln dist[y]`. NaN propagates so diverging training is detected.
pub fn cross_entropy(dist: &[f64], y: usize) -> f64 {
    let p = dist[y];
    if p.is_nan() {
        return p;
    }
    -p.max(MIN_PROB).ln()
}

/// `max(0, H - f_y + m)` where `H` is the largest non-target probability.
///
/// Also returns the index of `H` when the hinge is strictly active; at the
/// kink (value exactly 0) the term is treated as inactive.
pub fn hinge_term(probs: &[f64], y: usize, m: f64) -> (f64, Option<usize>) {
    let mut h_idx = None;
    for (j, &p) in probs.iter().enumerate() {
        if j == y {
            continue;
        }
        match h_idx {
            Some(k) if probs[k] >= p => {}
            _ => h_idx = Some(j),
        }
    }
    let Some(h) = h_idx else {
        return (0.0, None);
    };
    let raw = probs[h] - probs[y] + m;
    if raw > 0.0 {
        (raw, Some(h))
    } else {
        (0.0, None)
    }
}

pub(crate) fn check_label(y: usize, num_classes: usize) -> Result<()> {
    if y >= num_classes {
        return Err(NetError::InvalidClass {
            label: y,
            num_classes,
        });
    }
    Ok(())
}

/// `CE(f_b, y) + 1/(E-1) * sum_{i<E-1} max(0, H_i - f_i^y + m)` over a trace
/// with `E` exits. The final exit carries no hinge term.
pub fn margin_loss(trace: &PredictionTrace, y: usize, m: f64) -> Result<f64> {
    check_label(y, trace.final_distribution.len())?;
    let early = &trace.per_exit_probs[..trace.num_exits() - 1];
    let hinge: f64 = early.iter().map(|p| hinge_term(p, y, m).0).sum();
    Ok(cross_entropy(&trace.final_distribution, y) + hinge / early.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_costs_only_ce() {
        let one_hot = vec![0.0, 1.0, 0.0];
        let trace = PredictionTrace::new(vec![one_hot.clone(), one_hot.clone(), one_hot.clone()], one_hot);
        let loss = margin_loss(&trace, 1, 0.2).unwrap();
        assert!(loss.abs() < 1e-15);
    }

    #[test]
    fn hand_computed_three_class_loss() {
        // exit 0: H = 0.5, f_y = 0.3 -> 0.5 - 0.3 + 0.25 = 0.45
        // exit 1: H = 0.2, f_y = 0.7 -> 0.2 - 0.7 + 0.25 < 0 -> 0
        // CE: -ln(0.6)
        let trace = PredictionTrace::new(
            vec![vec![0.3, 0.5, 0.1], vec![0.7, 0.2, 0.2], vec![0.9, 0.3, 0.2]],
            vec![0.6, 0.3, 0.1],
        );
        let expected = -(0.6f64).ln() + (0.45 + 0.0) / 2.0;
        let loss = margin_loss(&trace, 0, 0.25).unwrap();
        assert!((loss - expected).abs() < 1e-14, "{loss} vs {expected}");
    }

    #[test]
    fn hinge_kink_is_inactive() {
        let (v, idx) = hinge_term(&[0.25, 0.5, 0.0], 1, 0.25);
        assert_eq!(v, 0.0);
        assert_eq!(idx, None);
    }

    #[test]
    fn rejects_out_of_range_label() {
        let trace = PredictionTrace::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]], vec![0.5, 0.5]);
        assert_eq!(
            margin_loss(&trace, 2, 0.1),
            Err(NetError::InvalidClass { label: 2, num_classes: 2 })
        );
    }
}

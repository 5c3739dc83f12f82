use serde::{Deserialize, Serialize};

/// Per-exit class probabilities of one sample.
///
/// `per_exit_probs[i]` is the prediction issued at exit `i` (the combined
/// recursion output at the final exit); `final_distribution` is the raw softmax
/// of the last classifier before it is merged into the recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionTrace {
    pub per_exit_probs: Vec<Vec<f64>>,
    pub per_exit_margin: Vec<f64>,
    pub final_distribution: Vec<f64>,
}

impl PredictionTrace {
    pub fn new(per_exit_probs: Vec<Vec<f64>>, final_distribution: Vec<f64>) -> Self {
        let per_exit_margin = per_exit_probs.iter().map(|p| margin(p)).collect();
        Self {
            per_exit_probs,
            per_exit_margin,
            final_distribution,
        }
    }

    pub fn num_exits(&self) -> usize {
        self.per_exit_probs.len()
    }

    pub fn prediction(&self, exit: usize) -> usize {
        argmax(&self.per_exit_probs[exit])
    }

    pub fn final_margin(&self) -> f64 {
        *self.per_exit_margin.last().expect("trace has at least one exit")
    }
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Largest and second-largest values (the second is 0 for a single entry).
pub fn top_two(v: &[f64]) -> (f64, f64) {
    let mut first = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &x in v {
        if x > first {
            second = first;
            first = x;
        } else if x > second {
            second = x;
        }
    }
    if second == f64::NEG_INFINITY {
        second = 0.0;
    }
    (first, second)
}

pub(crate) fn margin(v: &[f64]) -> f64 {
    let (a, b) = top_two(v);
    (a - b).max(0.0)
}

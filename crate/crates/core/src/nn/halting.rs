use serde::{Deserialize, Serialize};

use super::{argmax, NetError, PredictionTrace, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaltingKind {
    /// Halt when the top-1 / top-2 gap exceeds the threshold.
    RecursiveMargin,
    /// Halt when the largest probability exceeds the threshold.
    HighestProbability,
    /// Halt when the predicted class has not changed for `patience` exits.
    Patience,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaltingPolicy {
    pub kind: HaltingKind,
    pub threshold: f64,
    pub patience: usize,
}

impl HaltingPolicy {
    pub fn recursive_margin(threshold: f64) -> Self {
        Self {
            kind: HaltingKind::RecursiveMargin,
            threshold,
            patience: 1,
        }
    }

    pub fn highest_probability(threshold: f64) -> Self {
        Self {
            kind: HaltingKind::HighestProbability,
            threshold,
            patience: 1,
        }
    }

    pub fn patience(patience: usize) -> Self {
        Self {
            kind: HaltingKind::Patience,
            threshold: 0.0,
            patience,
        }
    }

    /// Threshold or patience, whichever parametrizes this policy.
    pub fn setting(&self) -> f64 {
        match self.kind {
            HaltingKind::Patience => self.patience as f64,
            _ => self.threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            HaltingKind::Patience if self.patience == 0 => {
                Err(NetError::InvalidPolicy("patience must be >= 1".into()))
            }
            HaltingKind::RecursiveMargin | HaltingKind::HighestProbability
                if !(self.threshold > 0.0 && self.threshold <= 1.0) =>
            {
                Err(NetError::InvalidPolicy(format!(
                    "threshold must be in (0,1], got {}",
                    self.threshold
                )))
            }
            _ => Ok(()),
        }
    }
}

pub fn argmax_history(trace: &PredictionTrace) -> Vec<usize> {
    trace.per_exit_probs.iter().map(|p| argmax(p)).collect()
}

/// Whether inference stops at `exit`. The final exit always halts.
///
/// `history` holds the argmax class of every exit so far and is only needed
/// by the patience policy.
pub fn halt_decision(
    trace: &PredictionTrace,
    exit: usize,
    policy: &HaltingPolicy,
    history: Option<&[usize]>,
) -> Result<bool> {
    let n = trace.num_exits();
    if exit >= n {
        return Err(NetError::InvalidExit {
            index: exit,
            num_exits: n,
        });
    }
    if exit == n - 1 {
        return Ok(true);
    }
    let probs = &trace.per_exit_probs[exit];
    Ok(match policy.kind {
        HaltingKind::RecursiveMargin => trace.per_exit_margin[exit] > policy.threshold,
        HaltingKind::HighestProbability => {
            probs.iter().copied().fold(f64::NEG_INFINITY, f64::max) > policy.threshold
        }
        HaltingKind::Patience => {
            let history = history
                .filter(|h| h.len() > exit)
                .ok_or(NetError::MissingHistory { exit })?;
            let seen = &history[..=exit];
            seen.len() >= policy.patience && {
                let tail = &seen[seen.len() - policy.patience..];
                tail.iter().all(|&c| c == tail[0])
            }
        }
    })
}

/// First exit at which `policy` halts.
pub fn halting_exit(trace: &PredictionTrace, policy: &HaltingPolicy) -> usize {
    let history = argmax_history(trace);
    (0..trace.num_exits())
        .find(|&i| halt_decision(trace, i, policy, Some(&history)).unwrap_or(false))
        .unwrap_or(trace.num_exits() - 1)
}

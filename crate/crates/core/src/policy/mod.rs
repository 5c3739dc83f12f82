//! Per-frame MDP over (early exit, MCS) states and the tabular Q-learning
//! agent that chooses exit / compute / offload in every slot.

mod agent;
mod env;
mod qtable;

pub use agent::{
    evaluate_policy, q_update, train_policy, AlphaSchedule, EpsilonSchedule, Evaluation,
    LearningCurve, PolicySummary, QHyper, RlConfig,
};
pub use env::{step, Environment, LabeledTrace, Outcome, StepOutcome};
pub use qtable::QTable;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::latency::{DelayBreakdown, KpiRecord, LatencyError};
use crate::radio::LinkError;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("action {action:?} is not available in state {state:?}")]
    UnavailableAction { state: MdpState, action: Action },
    #[error("state {0:?} is outside the table")]
    InvalidState(MdpState),
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("invalid rl config: {0}")]
    InvalidConfig(String),
    #[error("q-table parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Latency(#[from] LatencyError),
    #[error(transparent)]
    Link(#[from] LinkError),
}

/// Current early exit `k` (0..=K) and the MCS offered in this slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MdpState {
    pub exit_index: usize,
    pub mcs_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Action {
    /// Issue the result of the current exit.
    Exit = 0,
    /// Run the device up to the next exit.
    Compute = 1,
    /// Send the current embedding to the edge server.
    Offload = 2,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Exit, Action::Compute, Action::Offload];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

/// Sparse terminal reward: weighted savings when the proxy goal is met,
/// `penalty` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub gamma_comm: f64,
    pub gamma_comp: f64,
    pub m_th: f64,
    pub penalty: f64,
}

impl RewardConfig {
    pub fn new(gamma_comm: f64, m_th: f64) -> Self {
        Self {
            gamma_comm,
            gamma_comp: 1.0,
            m_th,
            penalty: -1.0,
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if !(self.gamma_comm >= 0.0 && self.gamma_comp >= 0.0) {
            return Err(PolicyError::InvalidConfig(format!(
                "reward weights must be nonnegative, got ({}, {})",
                self.gamma_comm, self.gamma_comp
            )));
        }
        if !(self.m_th > 0.0 && self.m_th < 1.0) {
            return Err(PolicyError::InvalidConfig(format!(
                "m_th must be in (0,1), got {}",
                self.m_th
            )));
        }
        Ok(())
    }
}

pub fn reward(kpis: &KpiRecord, cfg: &RewardConfig) -> f64 {
    if kpis.proxy_goal_met {
        cfg.gamma_comm * kpis.comm_saving + cfg.gamma_comp * kpis.comp_saving
    } else {
        cfg.penalty
    }
}

/// One frame: every decision taken and how the frame ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub trajectory: Vec<(MdpState, Action)>,
    pub final_exit: usize,
    pub offloaded: bool,
    pub delay: DelayBreakdown,
    pub margin: f64,
    pub reward: f64,
    pub kpis: KpiRecord,
    pub correct: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kpis(proxy: bool) -> KpiRecord {
        KpiRecord {
            comp_saving: 0.9,
            comm_saving: 1.0,
            margin: 0.5,
            proxy_goal_met: proxy,
            true_goal_met: proxy,
        }
    }

    #[test]
    fn reward_is_weighted_savings_or_penalty() {
        let cfg = RewardConfig::new(1.0, 0.2);
        assert!((reward(&kpis(true), &cfg) - 1.9).abs() < 1e-15);
        assert_eq!(reward(&kpis(false), &cfg), -1.0);
        let zero = RewardConfig { gamma_comm: 0.0, gamma_comp: 0.0, ..cfg };
        assert_eq!(reward(&kpis(true), &zero), 0.0);
    }

    #[test]
    fn reward_config_validation() {
        assert!(RewardConfig::new(1.0, 0.1).validate().is_ok());
        assert!(RewardConfig::new(-1.0, 0.1).validate().is_err());
        assert!(RewardConfig::new(1.0, 1.0).validate().is_err());
    }
}

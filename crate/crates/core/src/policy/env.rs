use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{reward, Action, MdpState, PolicyError, RewardConfig};
use crate::latency::{delay, DelayBreakdown, KpiRecord, SystemProfile, Termination};
use crate::nn::PredictionTrace;
use crate::radio::{self, LinkConfig};

/// Precomputed network output for one sample together with its label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledTrace {
    pub trace: PredictionTrace,
    pub label: usize,
}

/// Everything an episode needs: the sample pool the frames draw from, the
/// split-computation profile and the radio link.
#[derive(Debug, Clone)]
pub struct Environment {
    pub samples: Vec<LabeledTrace>,
    pub profile: SystemProfile,
    pub link: LinkConfig,
}

impl Environment {
    pub fn new(samples: Vec<LabeledTrace>, profile: SystemProfile, link: LinkConfig) -> Result<Self, PolicyError> {
        let env = Self { samples, profile, link };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        self.profile.validate()?;
        self.link.validate()?;
        if self.samples.is_empty() {
            return Err(PolicyError::InvalidEnvironment("sample pool is empty".into()));
        }
        let n = self.profile.num_exits();
        if n < 2 {
            return Err(PolicyError::InvalidEnvironment("need at least two exits".into()));
        }
        if let Some(bad) = self.samples.iter().position(|s| s.trace.num_exits() != n) {
            return Err(PolicyError::InvalidEnvironment(format!(
                "sample {bad} has {} exits, profile has {n}",
                self.samples[bad].trace.num_exits()
            )));
        }
        Ok(())
    }

    /// `K`, the index of the final exit.
    pub fn last_exit(&self) -> usize {
        self.profile.last_exit()
    }
}

/// How a frame ended and what it earned.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit: usize,
    pub offloaded: bool,
    pub delay: DelayBreakdown,
    pub margin: f64,
    pub correct: bool,
    pub kpis: KpiRecord,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Continue(MdpState),
    Terminal(Outcome),
}

/// Applies `action` in `state` for the frame's sample at distance `distance_m`.
///
/// Exit issues the current exit's prediction locally; Offload ships the
/// current embedding at this slot's rate and the server issues the final
/// combined prediction; Compute advances to the next exit with a freshly
/// faded MCS, or finishes the frame locally when it reaches exit `K`.
pub fn step<R: Rng + ?Sized>(
    env: &Environment,
    state: MdpState,
    action: Action,
    sample: &LabeledTrace,
    distance_m: f64,
    reward_cfg: &RewardConfig,
    rng: &mut R,
) -> Result<StepOutcome, PolicyError> {
    let last = env.last_exit();
    let k = state.exit_index;
    if k > last || state.mcs_index >= env.link.num_mcs() {
        return Err(PolicyError::InvalidState(state));
    }
    match action {
        Action::Exit => terminal(env, sample, k, Termination::LocalExit, 0.0, reward_cfg),
        Action::Offload => {
            if k == last {
                return Err(PolicyError::UnavailableAction { state, action });
            }
            let rate = radio::rate_bps(&env.link, state.mcs_index);
            terminal(env, sample, k, Termination::Offload, rate, reward_cfg)
        }
        Action::Compute if k + 1 == last || k == last => {
            terminal(env, sample, last, Termination::LocalExit, 0.0, reward_cfg)
        }
        Action::Compute => {
            let mcs_index = radio::mcs_transition_sample(&env.link, distance_m, rng)?;
            Ok(StepOutcome::Continue(MdpState {
                exit_index: k + 1,
                mcs_index,
            }))
        }
    }
}

fn terminal(
    env: &Environment,
    sample: &LabeledTrace,
    k: usize,
    how: Termination,
    rate_bps: f64,
    reward_cfg: &RewardConfig,
) -> Result<StepOutcome, PolicyError> {
    let offloaded = how == Termination::Offload;
    let d = delay(&env.profile, k, offloaded, rate_bps)?;
    // The server finishes the network, so an offloaded frame issues the final
    // combined prediction.
    let issued = if offloaded { env.last_exit() } else { k };
    let margin = sample.trace.per_exit_margin[issued];
    let correct = sample.trace.prediction(issued) == sample.label;
    let kpis = KpiRecord::new(&env.profile, k, how, &d, margin, reward_cfg.m_th, correct)?;
    Ok(StepOutcome::Terminal(Outcome {
        exit: k,
        offloaded,
        delay: d,
        margin,
        correct,
        kpis,
        reward: reward(&kpis, reward_cfg),
    }))
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::env::{step, Environment, Outcome, StepOutcome};
use super::{Action, EpisodeRecord, MdpState, PolicyError, QTable, RewardConfig};
use crate::latency::goal_effectiveness;
use crate::radio;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QHyper {
    pub alpha: f64,
    pub discount: f64,
}

/// One-step Q-learning backup. `next = None` marks a terminal transition,
/// whose target is the reward alone. Returns the updated value.
pub fn q_update(
    table: &mut QTable,
    s: MdpState,
    a: Action,
    reward: f64,
    next: Option<MdpState>,
    hyper: QHyper,
) -> Result<f64, PolicyError> {
    if !(hyper.alpha > 0.0 && hyper.alpha <= 1.0) {
        return Err(PolicyError::InvalidConfig(format!("alpha must be in (0,1], got {}", hyper.alpha)));
    }
    if !(0.0..=1.0).contains(&hyper.discount) {
        return Err(PolicyError::InvalidConfig(format!(
            "discount must be in [0,1], got {}",
            hyper.discount
        )));
    }
    table.check(s)?;
    if !table.is_available(s, a) {
        return Err(PolicyError::UnavailableAction { state: s, action: a });
    }
    let target = match next {
        Some(n) => {
            table.check(n)?;
            reward + hyper.discount * table.max_value(n)
        }
        None => reward,
    };
    let q = table.get(s, a);
    let updated = q + hyper.alpha * (target - q);
    table.set(s, a, updated);
    table.bump_visits(s, a);
    Ok(updated)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaSchedule {
    Constant,
    /// `alpha / sqrt(n)` on the n-th visit of a state-action pair.
    InverseSqrtVisits,
}

/// Linear decay from `start` to `end` over the first `decay_fraction` of the
/// episodes, then flat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_fraction: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay_fraction: 0.6,
        }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, episode: usize, total: usize) -> f64 {
        let horizon = self.decay_fraction * total as f64;
        if horizon <= 0.0 {
            return self.end;
        }
        let t = episode as f64 / horizon;
        if t >= 1.0 {
            return self.end;
        }
        self.start + (self.end - self.start) * t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RlConfig {
    pub alpha: f64,
    pub alpha_schedule: AlphaSchedule,
    pub discount: f64,
    pub epsilon: EpsilonSchedule,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            alpha_schedule: AlphaSchedule::Constant,
            discount: 1.0,
            epsilon: EpsilonSchedule::default(),
        }
    }
}

impl RlConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let e = &self.epsilon;
        if !(0.0..=1.0).contains(&e.start) || !(0.0..=1.0).contains(&e.end) {
            return Err(PolicyError::InvalidConfig("epsilon must stay in [0,1]".into()));
        }
        if !(0.0..=1.0).contains(&e.decay_fraction) {
            return Err(PolicyError::InvalidConfig("epsilon decay_fraction must be in [0,1]".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(PolicyError::InvalidConfig(format!("alpha must be in (0,1], got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(PolicyError::InvalidConfig(format!("discount must be in [0,1], got {}", self.discount)));
        }
        Ok(())
    }

    fn alpha_for(&self, visits_before: u64) -> f64 {
        match self.alpha_schedule {
            AlphaSchedule::Constant => self.alpha,
            AlphaSchedule::InverseSqrtVisits => self.alpha / ((visits_before + 1) as f64).sqrt(),
        }
    }
}

/// Terminal reward of every training episode, in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub episode_rewards: Vec<f64>,
}

impl LearningCurve {
    pub fn window_means(&self, window: usize) -> Vec<f64> {
        self.episode_rewards
            .chunks(window.max(1))
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect()
    }

    /// Mean reward of the first and last `fraction` of episodes.
    pub fn head_tail_means(&self, fraction: f64) -> (f64, f64) {
        let n = self.episode_rewards.len();
        let m = ((n as f64 * fraction).ceil() as usize).clamp(1, n.max(1));
        let mean = |s: &[f64]| if s.is_empty() { 0.0 } else { s.iter().sum::<f64>() / s.len() as f64 };
        (mean(&self.episode_rewards[..m.min(n)]), mean(&self.episode_rewards[n - m.min(n)..]))
    }
}

fn frame_start<R: Rng + ?Sized>(env: &Environment, rng: &mut R) -> (usize, f64, MdpState) {
    let sample = rng.random_range(0..env.samples.len());
    let ch = radio::draw_channel(&env.link, rng);
    let state = MdpState {
        exit_index: 0,
        mcs_index: ch.mcs_index,
    };
    (sample, ch.distance_m, state)
}

/// Epsilon-greedy tabular Q-learning over `episodes` frames.
pub fn train_policy(
    env: &Environment,
    reward_cfg: &RewardConfig,
    rl: &RlConfig,
    episodes: usize,
    seed: u64,
) -> Result<(QTable, LearningCurve), PolicyError> {
    env.validate()?;
    reward_cfg.validate()?;
    rl.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = QTable::new(env.profile.num_exits(), env.link.num_mcs());
    let mut curve = LearningCurve {
        episode_rewards: Vec::with_capacity(episodes),
    };
    let mut actions = Vec::with_capacity(3);
    for episode in 0..episodes {
        let eps = rl.epsilon.at(episode, episodes);
        let (idx, distance, mut state) = frame_start(env, &mut rng);
        let sample = &env.samples[idx];
        loop {
            let action = if rng.random::<f64>() < eps {
                actions.clear();
                actions.extend(table.available(state));
                actions[rng.random_range(0..actions.len())]
            } else {
                table.greedy(state)
            };
            let hyper = QHyper {
                alpha: rl.alpha_for(table.visits(state, action)),
                discount: rl.discount,
            };
            match step(env, state, action, sample, distance, reward_cfg, &mut rng)? {
                StepOutcome::Continue(next) => {
                    q_update(&mut table, state, action, 0.0, Some(next), hyper)?;
                    state = next;
                }
                StepOutcome::Terminal(out) => {
                    q_update(&mut table, state, action, out.reward, None, hyper)?;
                    curve.episode_rewards.push(out.reward);
                    break;
                }
            }
        }
    }
    Ok((table, curve))
}

/// Aggregates of a greedy evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub episodes: usize,
    pub mean_comp_saving: f64,
    pub mean_comm_saving: f64,
    pub goal_effectiveness: f64,
    pub proxy_goal_rate: f64,
    /// Mean loop delay over frames that did not hit a zero-rate slot.
    pub mean_delay_s: f64,
    pub mean_reward: f64,
    /// Share of frames ending at each exit without offloading.
    pub local_frequency: Vec<f64>,
    /// Share of frames offloaded after each exit.
    pub offload_frequency: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub records: Vec<EpisodeRecord>,
    pub summary: PolicySummary,
}

/// Runs one greedy frame. Each episode draws from its own ChaCha stream, so
/// different tables are evaluated on identical samples, distances and
/// fading sequences.
fn greedy_episode(
    table: &QTable,
    env: &Environment,
    reward_cfg: &RewardConfig,
    seed: u64,
    episode: u64,
) -> Result<EpisodeRecord, PolicyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    let (idx, distance, mut state) = frame_start(env, &mut rng);
    let sample = &env.samples[idx];
    let mut trajectory = Vec::new();
    loop {
        let action = table.greedy(state);
        trajectory.push((state, action));
        match step(env, state, action, sample, distance, reward_cfg, &mut rng)? {
            StepOutcome::Continue(next) => state = next,
            StepOutcome::Terminal(Outcome {
                exit,
                offloaded,
                delay,
                margin,
                correct,
                kpis,
                reward,
            }) => {
                return Ok(EpisodeRecord {
                    trajectory,
                    final_exit: exit,
                    offloaded,
                    delay,
                    margin,
                    reward,
                    kpis,
                    correct,
                })
            }
        }
    }
}

/// Greedy rollout of `table` over `episodes` frames.
pub fn evaluate_policy(
    table: &QTable,
    env: &Environment,
    reward_cfg: &RewardConfig,
    episodes: usize,
    seed: u64,
) -> Result<Evaluation, PolicyError> {
    env.validate()?;
    reward_cfg.validate()?;
    if table.num_exits() != env.profile.num_exits() || table.num_mcs() != env.link.num_mcs() {
        return Err(PolicyError::InvalidEnvironment(format!(
            "table is {}x{}, environment needs {}x{}",
            table.num_exits(),
            table.num_mcs(),
            env.profile.num_exits(),
            env.link.num_mcs()
        )));
    }
    let records = (0..episodes as u64)
        .map(|e| greedy_episode(table, env, reward_cfg, seed, e))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = summarize(&records, env.profile.num_exits());
    Ok(Evaluation { records, summary })
}

pub(crate) fn summarize(records: &[EpisodeRecord], num_exits: usize) -> PolicySummary {
    let n = records.len().max(1) as f64;
    let mut local = vec![0.0; num_exits];
    let mut offload = vec![0.0; num_exits];
    let (mut comp, mut comm, mut proxy, mut reward) = (0.0, 0.0, 0.0, 0.0);
    let (mut delay_sum, mut delay_n) = (0.0, 0usize);
    for r in records {
        comp += r.kpis.comp_saving;
        comm += r.kpis.comm_saving;
        proxy += f64::from(u8::from(r.kpis.proxy_goal_met));
        reward += r.reward;
        if !r.delay.outage {
            delay_sum += r.delay.total_s;
            delay_n += 1;
        }
        if r.offloaded {
            offload[r.final_exit] += 1.0;
        } else {
            local[r.final_exit] += 1.0;
        }
    }
    local.iter_mut().chain(offload.iter_mut()).for_each(|v| *v /= n);
    PolicySummary {
        episodes: records.len(),
        mean_comp_saving: comp / n,
        mean_comm_saving: comm / n,
        goal_effectiveness: goal_effectiveness(records.iter().map(|r| &r.kpis)),
        proxy_goal_rate: proxy / n,
        mean_delay_s: if delay_n == 0 { 0.0 } else { delay_sum / delay_n as f64 },
        mean_reward: reward / n,
        local_frequency: local,
        offload_frequency: offload,
    }
}

//! Split-computation delay model and the savings / goal-effectiveness KPIs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LatencyError {
    #[error("exit index {index} out of range for {num_exits} exits")]
    InvalidExit { index: usize, num_exits: usize },
    #[error("invalid system profile: {0}")]
    InvalidProfile(String),
}

/// Compute and payload profile of the split network plus the deadline.
///
/// Exit `k`'s local delay is `flops_fractions[k] * device_full_latency_s`;
/// offloading after it costs `embedding_bits[k] / R` on the air and
/// `(1 - flops_fractions[k]) * server_full_latency_s` at the edge server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemProfile {
    pub flops_fractions: Vec<f64>,
    pub embedding_bits: Vec<f64>,
    pub device_full_latency_s: f64,
    pub server_full_latency_s: f64,
    pub deadline_s: f64,
}

pub const DEVICE_FULL_LATENCY_S: f64 = 0.050;
pub const SERVER_FULL_LATENCY_S: f64 = 0.010;
pub const DEADLINE_S: f64 = 0.040;

impl SystemProfile {
    pub fn new(flops_fractions: Vec<f64>, embedding_bits: Vec<f64>) -> Self {
        Self {
            flops_fractions,
            embedding_bits,
            device_full_latency_s: DEVICE_FULL_LATENCY_S,
            server_full_latency_s: SERVER_FULL_LATENCY_S,
            deadline_s: DEADLINE_S,
        }
    }

    pub fn num_exits(&self) -> usize {
        self.flops_fractions.len()
    }

    /// Index `K` of the final exit.
    pub fn last_exit(&self) -> usize {
        self.num_exits() - 1
    }

    pub fn max_embedding_bits(&self) -> f64 {
        self.embedding_bits.iter().copied().fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), LatencyError> {
        let bad = |m: String| Err(LatencyError::InvalidProfile(m));
        let f = &self.flops_fractions;
        if f.is_empty() {
            return bad("flops_fractions is empty".into());
        }
        if f.len() != self.embedding_bits.len() {
            return bad(format!(
                "{} flops fractions but {} embedding sizes",
                f.len(),
                self.embedding_bits.len()
            ));
        }
        if f[0] <= 0.0 || f.windows(2).any(|w| w[0] >= w[1]) {
            return bad("flops_fractions must be positive and strictly increasing".into());
        }
        if *f.last().unwrap() != 1.0 {
            return bad("last flops fraction must be 1".into());
        }
        if self.embedding_bits.iter().any(|&n| !(n > 0.0 && n.is_finite())) {
            return bad("embedding_bits must be positive".into());
        }
        for (name, v) in [
            ("device_full_latency_s", self.device_full_latency_s),
            ("server_full_latency_s", self.server_full_latency_s),
            ("deadline_s", self.deadline_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    fn check_exit(&self, k: usize) -> Result<(), LatencyError> {
        if k >= self.num_exits() {
            return Err(LatencyError::InvalidExit {
                index: k,
                num_exits: self.num_exits(),
            });
        }
        Ok(())
    }
}

/// How a frame ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Result issued on the device (explicit exit or full local completion).
    LocalExit,
    /// Intermediate result sent to the edge server.
    Offload,
}

/// Loop delay of one frame, in seconds.
///
/// When an offload happens in a zero-rate slot, `outage` is set, `tx_s` is 0
/// and the deadline counts as missed regardless of `total_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayBreakdown {
    pub local_s: f64,
    pub tx_s: f64,
    pub remote_s: f64,
    pub total_s: f64,
    pub met_deadline: bool,
    pub outage: bool,
}

pub fn delay(
    profile: &SystemProfile,
    k: usize,
    offloaded: bool,
    rate_bps: f64,
) -> Result<DelayBreakdown, LatencyError> {
    profile.check_exit(k)?;
    let frac = profile.flops_fractions[k];
    let local_s = frac * profile.device_full_latency_s;
    let (tx_s, remote_s, outage) = if offloaded {
        let remote = (1.0 - frac) * profile.server_full_latency_s;
        if rate_bps > 0.0 {
            (profile.embedding_bits[k] / rate_bps, remote, false)
        } else {
            (0.0, remote, true)
        }
    } else {
        (0.0, 0.0, false)
    };
    let total_s = local_s + tx_s + remote_s;
    Ok(DelayBreakdown {
        local_s,
        tx_s,
        remote_s,
        total_s,
        met_deadline: !outage && total_s <= profile.deadline_s,
        outage,
    })
}

/// `(F_K - F_k) / F_K`.
pub fn comp_saving(profile: &SystemProfile, k: usize) -> Result<f64, LatencyError> {
    profile.check_exit(k)?;
    Ok(1.0 - profile.flops_fractions[k])
}

/// 1 for local results, `(max_j N_j - N_k) / max_j N_j` for offloads.
pub fn comm_saving(profile: &SystemProfile, k: usize, how: Termination) -> Result<f64, LatencyError> {
    profile.check_exit(k)?;
    Ok(match how {
        Termination::LocalExit => 1.0,
        Termination::Offload => {
            let max = profile.max_embedding_bits();
            (max - profile.embedding_bits[k]) / max
        }
    })
}

/// Deadline met and margin strictly above the threshold.
pub fn proxy_goal(delay: &DelayBreakdown, margin: f64, m_th: f64) -> bool {
    delay.met_deadline && margin > m_th
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiRecord {
    pub comp_saving: f64,
    pub comm_saving: f64,
    pub margin: f64,
    pub proxy_goal_met: bool,
    /// On time and correctly classified.
    pub true_goal_met: bool,
}

impl KpiRecord {
    pub fn new(
        profile: &SystemProfile,
        k: usize,
        how: Termination,
        delay: &DelayBreakdown,
        margin: f64,
        m_th: f64,
        correct: bool,
    ) -> Result<Self, LatencyError> {
        Ok(Self {
            comp_saving: comp_saving(profile, k)?,
            comm_saving: comm_saving(profile, k, how)?,
            margin,
            proxy_goal_met: proxy_goal(delay, margin, m_th),
            true_goal_met: delay.met_deadline && correct,
        })
    }
}

/// Fraction of frames that were both on time and correct.
pub fn goal_effectiveness<'a, I>(records: I) -> f64
where
    I: IntoIterator<Item = &'a KpiRecord>,
{
    let (mut hits, mut n) = (0usize, 0usize);
    for r in records {
        n += 1;
        hits += usize::from(r.true_goal_met);
    }
    if n == 0 {
        0.0
    } else {
        hits as f64 / n as f64
    }
}

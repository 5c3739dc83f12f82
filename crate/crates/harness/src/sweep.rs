//! The (m_th, gamma_comm) grid: one fresh policy per point on a shared
//! network and environment.

use goee::policy::{evaluate_policy, train_policy, PolicySummary, QTable};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{derive_seed, sweep_point_seed, ExperimentConfig};
use crate::pipeline::Prepared;
use crate::report::{ExitHistRow, TradeoffRow};
use crate::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m_th: f64,
    pub gamma_comm: f64,
    pub gamma_comp: f64,
    pub summary: PolicySummary,
}

impl SweepRow {
    pub fn tradeoff(&self) -> TradeoffRow {
        TradeoffRow {
            m_th: self.m_th,
            gamma_comm: self.gamma_comm,
            gamma_comp: self.gamma_comp,
            comp_saving: self.summary.mean_comp_saving,
            comm_saving: self.summary.mean_comm_saving,
            goal_effectiveness: self.summary.goal_effectiveness,
            mean_delay_ms: self.summary.mean_delay_s * 1e3,
        }
    }

    /// One row per exit and termination kind, local first.
    pub fn exit_hist(&self) -> Vec<ExitHistRow> {
        let s = &self.summary;
        [(false, &s.local_frequency), (true, &s.offload_frequency)]
            .into_iter()
            .flat_map(|(offloaded, freq)| {
                freq.iter().enumerate().map(move |(k, &f)| ExitHistRow {
                    m_th: self.m_th,
                    gamma_comm: self.gamma_comm,
                    exit_index: k,
                    offloaded,
                    frequency: f,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub fingerprint: String,
    pub seed: u64,
    pub exit_accuracy: Vec<f64>,
    pub flops_fractions: Vec<f64>,
    pub embedding_bits: Vec<f64>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn tradeoff_rows(&self) -> Vec<TradeoffRow> {
        self.rows.iter().map(SweepRow::tradeoff).collect()
    }

    pub fn exit_hist_rows(&self) -> Vec<ExitHistRow> {
        self.rows.iter().flat_map(SweepRow::exit_hist).collect()
    }
}

/// Trains and evaluates the policy of a single grid point.
pub fn run_point(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    m_th: f64,
    gamma_comm: f64,
) -> Result<(QTable, SweepRow, goee::policy::LearningCurve)> {
    let reward = cfg.reward.reward_config(m_th, gamma_comm);
    let seed = sweep_point_seed(cfg.seed, m_th, gamma_comm);
    let (table, curve) = train_policy(&prepared.env, &reward, &cfg.rl.agent, cfg.rl.train_episodes, seed)?;
    let eval = evaluate_policy(
        &table,
        &prepared.env,
        &reward,
        cfg.rl.eval_episodes,
        derive_seed(cfg.seed, &[b"eval"]),
    )?;
    let row = SweepRow {
        m_th,
        gamma_comm,
        gamma_comp: reward.gamma_comp,
        summary: eval.summary,
    };
    Ok((table, row, curve))
}

/// Runs the full grid on `jobs` worker threads; rows come back sorted by
/// (m_th, gamma_comm) whatever the scheduling.
pub fn run_sweep(cfg: &ExperimentConfig, prepared: &Prepared, jobs: usize) -> Result<SweepResult> {
    cfg.validate()?;
    let mut m_ths = cfg.sweep.m_th.clone();
    let mut gammas = cfg.sweep.gamma_comm.clone();
    m_ths.sort_by(f64::total_cmp);
    m_ths.dedup();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    let points: Vec<(f64, f64)> = m_ths
        .iter()
        .flat_map(|&m| gammas.iter().map(move |&g| (m, g)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let rows = pool.install(|| {
        points
            .par_iter()
            .map(|&(m, g)| run_point(cfg, prepared, m, g).map(|(_, row, _)| row))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(SweepResult {
        fingerprint: cfg.fingerprint(),
        seed: cfg.seed,
        exit_accuracy: crate::pipeline::exit_accuracies(&prepared.net, &prepared.data.test)?,
        flops_fractions: prepared.env.profile.flops_fractions.clone(),
        embedding_bits: prepared.env.profile.embedding_bits.clone(),
        rows,
    })
}

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

use serde::{Deserialize, Serialize};

use super::halting::halting_exit;
use super::{BaselineEENetwork, Dataset, HaltingPolicy, PredictionTrace, RecursiveEENetwork, Result};

/// A network that produces per-exit predictions and knows its exit costs.
pub trait ExitModel {
    fn trace(&self, x: &[f64]) -> Result<PredictionTrace>;

    /// Cumulative multiply-accumulates to produce each exit.
    fn exit_macs(&self) -> Vec<u64>;

    /// `F_k / F_K` for every exit.
    fn flops_fractions(&self) -> Vec<f64> {
        let macs = self.exit_macs();
        let total = *macs.last().expect("at least one exit") as f64;
        macs.iter().map(|&m| m as f64 / total).collect()
    }

    fn traces(&self, data: &Dataset) -> Result<Vec<PredictionTrace>> {
        data.inputs.iter().map(|x| self.trace(x)).collect()
    }
}

impl ExitModel for RecursiveEENetwork {
    fn trace(&self, x: &[f64]) -> Result<PredictionTrace> {
        self.forward_recursive(x)
    }

    fn exit_macs(&self) -> Vec<u64> {
        RecursiveEENetwork::exit_macs(self)
    }
}

impl ExitModel for BaselineEENetwork {
    fn trace(&self, x: &[f64]) -> Result<PredictionTrace> {
        self.forward(x)
    }

    fn exit_macs(&self) -> Vec<u64> {
        BaselineEENetwork::exit_macs(self)
    }
}

/// One point of an accuracy / compute trade-off curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub policy: HaltingPolicy,
    /// Mean `F_k / F_K` at the halting exit.
    pub flops_fraction: f64,
    pub accuracy: f64,
    pub mean_exit: f64,
}

/// Runs early-exit inference over `data` for every policy setting.
pub fn evaluate_flops_accuracy<M: ExitModel + ?Sized>(
    model: &M,
    data: &Dataset,
    policies: &[HaltingPolicy],
) -> Result<Vec<TradeoffPoint>> {
    for p in policies {
        p.validate()?;
    }
    let traces = model.traces(data)?;
    let fractions = model.flops_fractions();
    Ok(policies
        .iter()
        .map(|policy| curve_point(&traces, &data.labels, &fractions, policy))
        .collect())
}

pub(crate) fn curve_point(
    traces: &[PredictionTrace],
    labels: &[usize],
    fractions: &[f64],
    policy: &HaltingPolicy,
) -> TradeoffPoint {
    let n = traces.len().max(1) as f64;
    let (mut flops, mut correct, mut exits) = (0.0, 0usize, 0usize);
    for (t, &y) in traces.iter().zip(labels) {
        let k = halting_exit(t, policy);
        flops += fractions[k];
        exits += k;
        if t.prediction(k) == y {
            correct += 1;
        }
    }
    TradeoffPoint {
        policy: *policy,
        flops_fraction: flops / n,
        accuracy: correct as f64 / n,
        mean_exit: exits as f64 / n,
    }
}

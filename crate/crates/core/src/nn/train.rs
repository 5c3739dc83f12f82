use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BaselineEENetwork, Dataset, NetError, RecursiveEENetwork, Result, TrainConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-sample training loss of every epoch.
    pub epoch_losses: Vec<f64>,
}

/// Anything with a parameter list and a per-sample gradient.
trait Model {
    fn new_grad(&self) -> Self;
    fn accumulate(&self, x: &[f64], y: usize, margin: f64, g: &mut Self) -> Result<f64>;
    fn params(&self) -> Vec<&Vec<f64>>;
    fn params_mut(&mut self) -> Vec<&mut Vec<f64>>;
}

impl Model for RecursiveEENetwork {
    fn new_grad(&self) -> Self {
        self.zeros_like()
    }
    fn accumulate(&self, x: &[f64], y: usize, margin: f64, g: &mut Self) -> Result<f64> {
        self.accumulate_gradient(x, y, margin, g)
    }
    fn params(&self) -> Vec<&Vec<f64>> {
        self.tensors()
    }
    fn params_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.tensors_mut()
    }
}

impl Model for BaselineEENetwork {
    fn new_grad(&self) -> Self {
        self.zeros_like()
    }
    fn accumulate(&self, x: &[f64], y: usize, _margin: f64, g: &mut Self) -> Result<f64> {
        self.accumulate_gradient(x, y, g)
    }
    fn params(&self) -> Vec<&Vec<f64>> {
        self.tensors()
    }
    fn params_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.tensors_mut()
    }
}

/// Trains a recursive network on the margin loss with mini-batch gradient
/// descent. Deterministic given `cfg.rng_seed`.
pub fn train(
    mut net: RecursiveEENetwork,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(RecursiveEENetwork, TrainReport)> {
    cfg.validate(net.config.num_classes)?;
    let m = cfg.resolved_margin(net.config.num_classes);
    let report = sgd(&mut net, data, cfg, m)?;
    Ok((net, report))
}

/// Trains the multi-exit baseline on the summed per-exit cross-entropy.
pub fn train_baseline(
    mut net: BaselineEENetwork,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(BaselineEENetwork, TrainReport)> {
    cfg.validate(net.config.num_classes)?;
    let report = sgd(&mut net, data, cfg, 0.0)?;
    Ok((net, report))
}

fn sgd<M: Model>(model: &mut M, data: &Dataset, cfg: &TrainConfig, margin: f64) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(NetError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut velocity = model.new_grad();
    let mut report = TrainReport::default();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let mut grads = model.new_grad();
            let mut batch_loss = 0.0;
            for &i in idx {
                batch_loss += model.accumulate(&data.inputs[i], data.labels[i], margin, &mut grads)?;
            }
            if !batch_loss.is_finite() {
                return Err(NetError::NonFiniteLoss { epoch, batch });
            }
            epoch_loss += batch_loss;
            let scale = 1.0 / idx.len() as f64;
            let (lr, mu) = (cfg.learning_rate, cfg.momentum);
            let g = grads.params();
            for ((w, v), g) in model.params_mut().into_iter().zip(velocity.params_mut()).zip(g) {
                for ((w, v), &g) in w.iter_mut().zip(v.iter_mut()).zip(g) {
                    *v = mu * *v + g * scale;
                    *w -= lr * *v;
                }
            }
        }
        report.epoch_losses.push(epoch_loss / data.len() as f64);
    }
    Ok(report)
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::backbone::Backbone;
use super::linear::Linear;
use super::loss::{check_label, cross_entropy};
use super::{softmax, BackboneConfig, PredictionTrace, Result};

/// Multi-exit baseline: an independent softmax classifier on every exit,
/// trained with the equal-weight sum of per-exit cross-entropies.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineEENetwork {
    pub config: BackboneConfig,
    pub backbone: Backbone,
    pub heads: Vec<Linear>,
}

impl BaselineEENetwork {
    pub fn new(config: BackboneConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let backbone = Backbone::init(&config, &mut rng);
        let heads = (0..config.num_exits())
            .map(|_| Linear::uniform(config.head_dim, config.num_classes, 1.0, 0.0, &mut rng))
            .collect();
        Ok(Self {
            config,
            backbone,
            heads,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config.clone(),
            backbone: self.backbone.zeros_like(),
            heads: self.heads.iter().map(Linear::zeros_like).collect(),
        }
    }

    pub fn num_exits(&self) -> usize {
        self.heads.len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<PredictionTrace> {
        self.backbone.check_input(x)?;
        let acts = self.backbone.forward(x);
        let probs: Vec<Vec<f64>> = self
            .heads
            .iter()
            .zip(&acts.features)
            .map(|(h, e)| softmax(&h.forward(e)))
            .collect();
        let last = probs.last().cloned().unwrap_or_default();
        Ok(PredictionTrace::new(probs, last))
    }

    pub fn loss(&self, x: &[f64], y: usize) -> Result<f64> {
        check_label(y, self.config.num_classes)?;
        let t = self.forward(x)?;
        Ok(t.per_exit_probs.iter().map(|p| cross_entropy(p, y)).sum())
    }

    pub fn loss_gradient(&self, x: &[f64], y: usize) -> Result<(f64, Self)> {
        let mut grads = self.zeros_like();
        let loss = self.accumulate_gradient(x, y, &mut grads)?;
        Ok((loss, grads))
    }

    pub(crate) fn accumulate_gradient(&self, x: &[f64], y: usize, grads: &mut Self) -> Result<f64> {
        self.backbone.check_input(x)?;
        check_label(y, self.config.num_classes)?;
        let acts = self.backbone.forward(x);
        let mut loss = 0.0;
        let mut d_features = Vec::with_capacity(self.heads.len());
        for (j, head) in self.heads.iter().enumerate() {
            let e = &acts.features[j];
            let mut q = softmax(&head.forward(e));
            loss += cross_entropy(&q, y);
            q[y] -= 1.0;
            d_features.push(head.backward(e, &q, &mut grads.heads[j]));
        }
        self.backbone
            .backward(x, &acts, d_features, &mut grads.backbone);
        Ok(loss)
    }

    pub fn exit_macs(&self) -> Vec<u64> {
        let mut heads = 0u64;
        (0..self.num_exits())
            .map(|i| {
                heads += self.backbone.features[i].macs() + self.heads[i].macs();
                self.backbone.block_macs(self.backbone.exit_blocks[i]) + heads
            })
            .collect()
    }

    pub fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut out = self.backbone.tensors();
        for h in &self.heads {
            out.extend([&h.weight, &h.bias]);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = self.backbone.tensors_mut();
        for h in &mut self.heads {
            out.extend([&mut h.weight, &mut h.bias]);
        }
        out
    }
}

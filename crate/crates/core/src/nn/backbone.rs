use rand::Rng;

use super::linear::{relu_backward, relu_in_place, Linear};
use super::{BackboneConfig, NetError, Result};

/// Blocks `l_1..l_b` plus the feature map `e_i` of every exit.
#[derive(Debug, Clone, PartialEq)]
pub struct Backbone {
    pub blocks: Vec<Linear>,
    pub features: Vec<Linear>,
    pub exit_blocks: Vec<usize>,
    input_dim: usize,
}

/// Post-activation values kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct BackboneActs {
    pub hidden: Vec<Vec<f64>>,
    pub features: Vec<Vec<f64>>,
}

const RELU_GAIN: f64 = 2.449_489_742_783_178; // sqrt(6)

impl Backbone {
    pub fn init<R: Rng + ?Sized>(cfg: &BackboneConfig, rng: &mut R) -> Self {
        let mut blocks = Vec::with_capacity(cfg.hidden_dims.len());
        let mut prev = cfg.input_dim;
        for &h in &cfg.hidden_dims {
            blocks.push(Linear::uniform(prev, h, RELU_GAIN, 0.0, rng));
            prev = h;
        }
        let exit_blocks = cfg.exit_blocks();
        let features = exit_blocks
            .iter()
            .map(|&blk| Linear::uniform(cfg.hidden_dims[blk], cfg.head_dim, RELU_GAIN, 0.0, rng))
            .collect();
        Self {
            blocks,
            features,
            exit_blocks,
            input_dim: cfg.input_dim,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            blocks: self.blocks.iter().map(Linear::zeros_like).collect(),
            features: self.features.iter().map(Linear::zeros_like).collect(),
            exit_blocks: self.exit_blocks.clone(),
            input_dim: self.input_dim,
        }
    }

    pub fn num_exits(&self) -> usize {
        self.exit_blocks.len()
    }

    pub(crate) fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(NetError::InputShape {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn forward(&self, x: &[f64]) -> BackboneActs {
        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(self.blocks.len());
        for (l, block) in self.blocks.iter().enumerate() {
            let input = if l == 0 { x } else { &hidden[l - 1] };
            let mut h = block.forward(input);
            relu_in_place(&mut h);
            hidden.push(h);
        }
        let features = self
            .features
            .iter()
            .zip(&self.exit_blocks)
            .map(|(f, &blk)| {
                let mut e = f.forward(&hidden[blk]);
                relu_in_place(&mut e);
                e
            })
            .collect();
        BackboneActs { hidden, features }
    }

    /// Backpropagates gradients w.r.t. the (post-ReLU) exit features.
    pub(crate) fn backward(
        &self,
        x: &[f64],
        acts: &BackboneActs,
        mut d_features: Vec<Vec<f64>>,
        grads: &mut Backbone,
    ) {
        let b = self.blocks.len();
        let mut d_hidden: Vec<Option<Vec<f64>>> = vec![None; b];
        for (j, &blk) in self.exit_blocks.iter().enumerate() {
            let d = &mut d_features[j];
            if d.iter().all(|&g| g == 0.0) {
                continue;
            }
            relu_backward(&acts.features[j], d);
            let dh = self.features[j].backward(&acts.hidden[blk], d, &mut grads.features[j]);
            accumulate(&mut d_hidden[blk], dh);
        }
        for l in (0..b).rev() {
            let Some(mut dz) = d_hidden[l].take() else {
                continue;
            };
            relu_backward(&acts.hidden[l], &mut dz);
            let input = if l == 0 { x } else { &acts.hidden[l - 1] };
            let dx = self.blocks[l].backward(input, &dz, &mut grads.blocks[l]);
            if l > 0 {
                accumulate(&mut d_hidden[l - 1], dx);
            }
        }
    }

    /// Cumulative MACs of the backbone up to and including block `blk`.
    pub fn block_macs(&self, blk: usize) -> u64 {
        self.blocks[..=blk].iter().map(Linear::macs).sum()
    }

    pub(crate) fn tensors(&self) -> Vec<&Vec<f64>> {
        self.blocks
            .iter()
            .chain(&self.features)
            .flat_map(|l| [&l.weight, &l.bias])
            .collect()
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.blocks
            .iter_mut()
            .chain(self.features.iter_mut())
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }
}

fn accumulate(slot: &mut Option<Vec<f64>>, v: Vec<f64>) {
    match slot {
        Some(acc) => acc.iter_mut().zip(v).for_each(|(a, b)| *a += b),
        None => *slot = Some(v),
    }
}

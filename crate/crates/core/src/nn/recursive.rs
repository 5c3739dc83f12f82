use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::backbone::{Backbone, BackboneActs};
use super::linear::Linear;
use super::loss::{check_label, hinge_term};
use super::{sigmoid, softmax, BackboneConfig, PredictionTrace, Result};

/// Initial bias of every moving-mass head: `sigmoid(-2) ~ 0.12`, so freshly
/// initialized exits stay close to the recursion fixed point.
pub const MASS_BIAS_INIT: f64 = -2.0;

/// `f_prev + (1 - f_prev) * m_pos - f_prev * m_neg`, elementwise.
pub fn mass_update(prev: &[f64], m_pos: &[f64], m_neg: &[f64]) -> Vec<f64> {
    prev.iter()
        .zip(m_pos.iter().zip(m_neg))
        .map(|(&f, (&p, &n))| f + (1.0 - f) * p - f * n)
        .collect()
}

/// Recursive early-exit network.
///
/// Exit 0 predicts independent per-class probabilities through a sigmoid
/// head. Every intermediate exit owns a positive and a negative moving-mass
/// head (linear + sigmoid) that move probability mass relative to the previous
/// exit. The final exit carries a softmax classifier whose distribution fills
/// the remaining mass: `f_prev + (1 - f_prev) * softmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveEENetwork {
    pub config: BackboneConfig,
    pub backbone: Backbone,
    /// Sigmoid predictor of exit 0.
    pub first_head: Linear,
    /// `(m+, m-)` heads of exits `1..E-1`.
    pub mass_heads: Vec<(Linear, Linear)>,
    /// Softmax classifier of the final exit.
    pub final_head: Linear,
}

pub(crate) struct RecursiveCache {
    acts: BackboneActs,
    probs: Vec<Vec<f64>>,
    masses: Vec<(Vec<f64>, Vec<f64>)>,
    softmax: Vec<f64>,
}

impl RecursiveEENetwork {
    pub fn new(config: BackboneConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let backbone = Backbone::init(&config, &mut rng);
        let c = config.num_classes;
        let d = config.head_dim;
        let first_head = Linear::uniform(d, c, 1.0, 0.0, &mut rng);
        let mass_heads = (1..config.num_exits() - 1)
            .map(|_| {
                (
                    Linear::uniform(d, c, 1.0, MASS_BIAS_INIT, &mut rng),
                    Linear::uniform(d, c, 1.0, MASS_BIAS_INIT, &mut rng),
                )
            })
            .collect();
        let final_head = Linear::uniform(d, c, 1.0, 0.0, &mut rng);
        Ok(Self {
            config,
            backbone,
            first_head,
            mass_heads,
            final_head,
        })
    }

    /// Same shapes, all parameters zero. Used as a gradient bundle.
    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config.clone(),
            backbone: self.backbone.zeros_like(),
            first_head: self.first_head.zeros_like(),
            mass_heads: self
                .mass_heads
                .iter()
                .map(|(p, n)| (p.zeros_like(), n.zeros_like()))
                .collect(),
            final_head: self.final_head.zeros_like(),
        }
    }

    pub fn num_exits(&self) -> usize {
        self.backbone.num_exits()
    }

    pub fn forward_recursive(&self, x: &[f64]) -> Result<PredictionTrace> {
        self.backbone.check_input(x)?;
        let cache = self.forward_cached(x);
        Ok(Self::trace_from(cache))
    }

    fn trace_from(cache: RecursiveCache) -> PredictionTrace {
        PredictionTrace::new(cache.probs, cache.softmax)
    }

    pub(crate) fn forward_cached(&self, x: &[f64]) -> RecursiveCache {
        let acts = self.backbone.forward(x);
        let e = &acts.features;
        let n = e.len();
        let mut probs = Vec::with_capacity(n);
        probs.push(self.first_head.forward(&e[0]).into_iter().map(sigmoid).collect::<Vec<_>>());
        let mut masses = Vec::with_capacity(n.saturating_sub(2));
        for (j, (pos, neg)) in self.mass_heads.iter().enumerate() {
            let feat = &e[j + 1];
            let mp: Vec<f64> = pos.forward(feat).into_iter().map(sigmoid).collect();
            let mn: Vec<f64> = neg.forward(feat).into_iter().map(sigmoid).collect();
            let next = mass_update(&probs[j], &mp, &mn);
            probs.push(next);
            masses.push((mp, mn));
        }
        let softmax = softmax(&self.final_head.forward(&e[n - 1]));
        let prev = &probs[n - 2];
        let combined = prev
            .iter()
            .zip(&softmax)
            .map(|(&f, &q)| f + (1.0 - f) * q)
            .collect();
        probs.push(combined);
        RecursiveCache {
            acts,
            probs,
            masses,
            softmax,
        }
    }

    /// Loss value and its gradient with respect to every parameter.
    ///
    /// Reverse-mode through the hinge terms (subgradient 0 at the kink), the
    /// moving-mass recursion, the sigmoids, the ReLUs (derivative 0 at 0) and
    /// the final softmax cross-entropy. The combined final output does not
    /// enter the loss and receives no gradient.
    pub fn loss_gradient(&self, x: &[f64], y: usize, m: f64) -> Result<(f64, Self)> {
        let mut grads = self.zeros_like();
        let loss = self.accumulate_gradient(x, y, m, &mut grads)?;
        Ok((loss, grads))
    }

    pub(crate) fn accumulate_gradient(
        &self,
        x: &[f64],
        y: usize,
        m: f64,
        grads: &mut Self,
    ) -> Result<f64> {
        self.backbone.check_input(x)?;
        let c = self.config.num_classes;
        check_label(y, c)?;
        let cache = self.forward_cached(x);
        let n = cache.probs.len();
        let early = n - 1;
        let scale = 1.0 / early as f64;

        // dL/df_i for the early exits, starting from the hinge terms.
        let mut d_probs: Vec<Vec<f64>> = vec![vec![0.0; c]; early];
        let mut loss = 0.0;
        for (i, p) in cache.probs[..early].iter().enumerate() {
            let (v, h) = hinge_term(p, y, m);
            if let Some(h) = h {
                loss += scale * v;
                d_probs[i][h] += scale;
                d_probs[i][y] -= scale;
            }
        }
        loss += super::loss::cross_entropy(&cache.softmax, y);

        let mut d_features: Vec<Vec<f64>> = vec![Vec::new(); n];

        // Final exit: softmax cross-entropy.
        let mut d_logits = cache.softmax.clone();
        d_logits[y] -= 1.0;
        d_features[n - 1] =
            self.final_head
                .backward(&cache.acts.features[n - 1], &d_logits, &mut grads.final_head);

        // Mass recursion, from the deepest intermediate exit back to exit 1.
        for i in (1..early).rev() {
            let (mp, mn) = &cache.masses[i - 1];
            let prev = &cache.probs[i - 1];
            let df = std::mem::take(&mut d_probs[i]);
            let mut d_pos = vec![0.0; c];
            let mut d_neg = vec![0.0; c];
            for k in 0..c {
                d_probs[i - 1][k] += df[k] * (1.0 - mp[k] - mn[k]);
                d_pos[k] = df[k] * (1.0 - prev[k]) * mp[k] * (1.0 - mp[k]);
                d_neg[k] = -df[k] * prev[k] * mn[k] * (1.0 - mn[k]);
            }
            let (pos, neg) = &self.mass_heads[i - 1];
            let (gpos, gneg) = &mut grads.mass_heads[i - 1];
            let feat = &cache.acts.features[i];
            let mut de = pos.backward(feat, &d_pos, gpos);
            let de_neg = neg.backward(feat, &d_neg, gneg);
            de.iter_mut().zip(de_neg).for_each(|(a, b)| *a += b);
            d_features[i] = de;
        }

        // Exit 0: sigmoid predictor.
        let f0 = &cache.probs[0];
        let d_s: Vec<f64> = d_probs[0]
            .iter()
            .zip(f0)
            .map(|(&g, &p)| g * p * (1.0 - p))
            .collect();
        d_features[0] = self
            .first_head
            .backward(&cache.acts.features[0], &d_s, &mut grads.first_head);

        self.backbone
            .backward(x, &cache.acts, d_features, &mut grads.backbone);
        Ok(loss)
    }

    /// Cumulative multiply-accumulates needed to produce each exit's
    /// prediction: backbone blocks, and every exit head up to and including it.
    pub fn exit_macs(&self) -> Vec<u64> {
        let n = self.num_exits();
        let mut heads = 0u64;
        (0..n)
            .map(|i| {
                heads += self.backbone.features[i].macs();
                heads += if i == 0 {
                    self.first_head.macs()
                } else if i == n - 1 {
                    self.final_head.macs()
                } else {
                    let (p, q) = &self.mass_heads[i - 1];
                    p.macs() + q.macs()
                };
                self.backbone.block_macs(self.backbone.exit_blocks[i]) + heads
            })
            .collect()
    }

    /// Parameter tensors in checkpoint order.
    pub fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut out = self.backbone.tensors();
        out.extend([&self.first_head.weight, &self.first_head.bias]);
        for (p, n) in &self.mass_heads {
            out.extend([&p.weight, &p.bias, &n.weight, &n.bias]);
        }
        out.extend([&self.final_head.weight, &self.final_head.bias]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = self.backbone.tensors_mut();
        out.extend([&mut self.first_head.weight, &mut self.first_head.bias]);
        for (p, n) in &mut self.mass_heads {
            out.extend([&mut p.weight, &mut p.bias, &mut n.weight, &mut n.bias]);
        }
        out.extend([&mut self.final_head.weight, &mut self.final_head.bias]);
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

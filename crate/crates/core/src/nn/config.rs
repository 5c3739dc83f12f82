use serde::{Deserialize, Serialize};

use super::{NetError, Result};

fn default_head_dim() -> usize {
    16
}

/// Shape of a multi-exit MLP backbone.
///
/// `exit_indices` are 1-based block indices; `None` attaches one exit per
/// block. The last exit always sits on the last block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackboneConfig {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub num_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_indices: Option<Vec<usize>>,
    /// Width of the per-exit feature map `e_i`.
    #[serde(default = "default_head_dim")]
    pub head_dim: usize,
}

impl BackboneConfig {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, num_classes: usize) -> Self {
        Self {
            input_dim,
            hidden_dims,
            num_classes,
            exit_indices: None,
            head_dim: default_head_dim(),
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.hidden_dims.len()
    }

    /// Resolved 1-based exit block indices.
    pub fn exits(&self) -> Vec<usize> {
        match &self.exit_indices {
            Some(v) => v.clone(),
            None => (1..=self.hidden_dims.len()).collect(),
        }
    }

    pub fn num_exits(&self) -> usize {
        self.exits().len()
    }

    /// 0-based block index carrying each exit.
    pub fn exit_blocks(&self) -> Vec<usize> {
        self.exits().into_iter().map(|i| i - 1).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NetError::InvalidConfig(m));
        if self.input_dim == 0 {
            return bad("input_dim must be positive".into());
        }
        let b = self.hidden_dims.len();
        if b < 2 {
            return bad(format!("need at least 2 blocks, got {b}"));
        }
        if self.hidden_dims.contains(&0) {
            return bad("hidden_dims must all be positive".into());
        }
        if self.num_classes < 2 {
            return bad(format!("num_classes must be >= 2, got {}", self.num_classes));
        }
        if self.head_dim == 0 {
            return bad("head_dim must be positive".into());
        }
        let exits = self.exits();
        if exits.len() < 2 {
            return bad("need at least one early exit besides the final one".into());
        }
        if exits[0] == 0 {
            return bad("exit_indices are 1-based".into());
        }
        if exits.windows(2).any(|w| w[0] >= w[1]) {
            return bad("exit_indices must be strictly increasing".into());
        }
        if *exits.last().unwrap() != b {
            return bad(format!("last exit index must be {b}"));
        }
        Ok(())
    }
}

const BINARY_MARGIN: f64 = 0.5;

fn default_momentum() -> f64 {
    0.9
}

/// Mini-batch gradient descent settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Safety margin of the hinge terms; `None` means `2 / num_classes`,
    /// capped at 0.5 so binary tasks still get a margin inside (0,1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    pub learning_rate: f64,
    /// Heavy-ball momentum; 0 gives plain SGD.
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin: None,
            learning_rate: 0.05,
            momentum: default_momentum(),
            epochs: 30,
            batch_size: 32,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn resolved_margin(&self, num_classes: usize) -> f64 {
        self.margin
            .unwrap_or_else(|| (2.0 / num_classes as f64).min(BINARY_MARGIN))
    }

    pub fn validate(&self, num_classes: usize) -> Result<()> {
        let bad = |m: String| Err(NetError::InvalidTrainConfig(m));
        let m = self.resolved_margin(num_classes);
        if !(m > 0.0 && m < 1.0) {
            return bad(format!("margin must be in (0,1), got {m}"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must be in [0,1), got {}", self.momentum));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        Ok(())
    }
}

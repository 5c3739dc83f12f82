//! Early-exit networks at desk scale.
//!
//! Both network flavours share the same MLP [`Backbone`]: `b` affine + ReLU
//! blocks, with one affine + ReLU feature map `e_i` attached to every block
//! that carries an exit. They differ only in how exit predictions are formed:
//!
//! - [`RecursiveEENetwork`] builds per-class probabilities recursively with
//!   positive / negative moving-mass heads and is trained with the margin loss.
//! - [`BaselineEENetwork`] puts an independent softmax classifier on every
//!   exit and is trained with the equally weighted sum of cross-entropies.

mod backbone;
mod baseline;
mod checkpoint;
mod config;
mod data;
mod eval;
mod halting;
mod linear;
mod loss;
mod recursive;
mod trace;
mod train;

pub use backbone::Backbone;
pub use baseline::BaselineEENetwork;
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint};
pub use config::{BackboneConfig, TrainConfig};
pub use data::{BlobSpec, Dataset, MoonsSpec, SyntheticTask};
pub use eval::{evaluate_flops_accuracy, ExitModel, TradeoffPoint};
pub use halting::{argmax_history, halt_decision, halting_exit, HaltingKind, HaltingPolicy};
pub use linear::Linear;
pub use loss::{cross_entropy, hinge_term, margin_loss};
pub use recursive::{mass_update, RecursiveEENetwork};
pub use trace::{argmax, top_two, PredictionTrace};
pub use train::{train, train_baseline, TrainReport};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("invalid backbone config: {0}")]
    InvalidConfig(String),
    #[error("invalid train config: {0}")]
    InvalidTrainConfig(String),
    #[error("input has {actual} features, network expects {expected}")]
    InputShape { expected: usize, actual: usize },
    #[error("class index {label} out of range for {num_classes} classes")]
    InvalidClass { label: usize, num_classes: usize },
    #[error("exit index {index} out of range for {num_exits} exits")]
    InvalidExit { index: usize, num_exits: usize },
    #[error("invalid halting policy: {0}")]
    InvalidPolicy(String),
    #[error("patience halting needs an argmax history covering exits 0..={exit}")]
    MissingHistory { exit: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl From<std::io::Error> for NetError {
    fn from(e: std::io::Error) -> Self {
        NetError::Checkpoint(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, NetError>;

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

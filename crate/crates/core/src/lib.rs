//! Recursive early-exit networks and the goal-oriented offloading loop built
//! on top of them.
//!
//! The crate is split along the pipeline:
//!
//! - [`nn`]: the recursive early-exit network (moving-mass recursion, margin
//!   loss, manual backpropagation, halting policies), an independently trained
//!   multi-exit baseline, synthetic datasets and checkpoints.
//! - [`radio`]: path loss, Rayleigh block fading and MCS selection.
//! - [`latency`]: split-computation delay model and the savings / goal KPIs.
//! - [`policy`]: the per-frame MDP and the tabular Q-learning agent that picks
//!   exit / compute / offload in every slot.

pub mod latency;
pub mod nn;
pub mod policy;
pub mod radio;

pub use latency::{DelayBreakdown, KpiRecord, SystemProfile, Termination};
pub use nn::{
    BackboneConfig, BaselineEENetwork, Dataset, HaltingKind, HaltingPolicy, PredictionTrace,
    RecursiveEENetwork, TrainConfig,
};
pub use policy::{Action, EpisodeRecord, MdpState, QTable, RewardConfig};
pub use radio::{ChannelDraw, LinkConfig, Placement};

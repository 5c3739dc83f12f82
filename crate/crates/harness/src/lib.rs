//! Experiment orchestration for goal-oriented early-exit offloading:
//! configuration, network training, policy sweeps, CSV reports and plots.

pub mod config;
pub mod fig2;
pub mod pipeline;
pub mod plot;
pub mod report;
pub mod sweep;

use thiserror::Error;

pub use config::{derive_seed, sweep_point_seed, ExperimentConfig};
pub use fig2::{dominance, run_fig2, Dominance, Fig2Point};
pub use pipeline::{build_environment, build_profile, prepare_data, train_network, Prepared, SplitData};
pub use report::{read_exit_hist, read_tradeoff, write_exit_hist, write_tradeoff, ExitHistRow, TradeoffRow};
pub use sweep::{run_sweep, spearman, SweepResult, SweepRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("config field `{0}`: {1}")]
    Field(String, String),
    #[error(transparent)]
    Net(#[from] goee::nn::NetError),
    #[error(transparent)]
    Policy(#[from] goee::policy::PolicyError),
    #[error(transparent)]
    Latency(#[from] goee::latency::LatencyError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("plot: {0}")]
    Plot(String),
    #[error("report: {0}")]
    Report(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

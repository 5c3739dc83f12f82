//! Shared steps: sample the desk dataset, train networks, derive the
//! split-computation profile and assemble the offloading environment.

use goee::latency::SystemProfile;
use goee::nn::{self, BaselineEENetwork, Dataset, ExitModel, RecursiveEENetwork, TrainReport};
use goee::policy::{Environment, LabeledTrace};

use crate::config::{derive_seed, ExperimentConfig};
use crate::Result;

/// Train, test and episode-pool splits of one synthetic task.
#[derive(Debug, Clone)]
pub struct SplitData {
    pub train: Dataset,
    pub test: Dataset,
    pub pool: Dataset,
}

pub fn prepare_data(cfg: &ExperimentConfig) -> SplitData {
    let task = cfg.task();
    let task_seed = derive_seed(cfg.seed, &[b"task"]);
    let draw = |tag: &[u8], n| task.sample(task_seed, derive_seed(cfg.seed, &[b"data", tag]), n);
    SplitData {
        train: draw(b"train", cfg.data.train_size),
        test: draw(b"test", cfg.data.test_size),
        pool: draw(b"pool", cfg.data.pool_size),
    }
}

/// Trains the recursive network from its derived seeds.
pub fn train_network(cfg: &ExperimentConfig, train: &Dataset) -> Result<(RecursiveEENetwork, TrainReport)> {
    let net = RecursiveEENetwork::new(cfg.backbone.clone(), derive_seed(cfg.seed, &[b"init", b"recursive"]))?;
    let tc = cfg.train.to_train_config(derive_seed(cfg.seed, &[b"train", b"recursive"]));
    Ok(nn::train(net, train, &tc)?)
}

pub fn train_baseline_network(
    cfg: &ExperimentConfig,
    train: &Dataset,
) -> Result<(BaselineEENetwork, TrainReport)> {
    let net = BaselineEENetwork::new(cfg.backbone.clone(), derive_seed(cfg.seed, &[b"init", b"baseline"]))?;
    let tc = cfg.train.to_train_config(derive_seed(cfg.seed, &[b"train", b"baseline"]));
    Ok(nn::train_baseline(net, train, &tc)?)
}

/// Fractions come from the network's MAC counts and payloads from the width
/// of the block feeding each exit, unless the config overrides them.
pub fn build_profile(cfg: &ExperimentConfig, net: &RecursiveEENetwork) -> Result<SystemProfile> {
    let p = &cfg.profile;
    let flops_fractions = p.flops_fractions.clone().unwrap_or_else(|| net.flops_fractions());
    let embedding_bits = p.embedding_bits.clone().unwrap_or_else(|| {
        cfg.backbone
            .exit_blocks()
            .iter()
            .map(|&b| cfg.backbone.hidden_dims[b] as f64 * p.bits_per_unit)
            .collect()
    });
    let profile = SystemProfile {
        flops_fractions,
        embedding_bits,
        device_full_latency_s: p.device_full_latency_s,
        server_full_latency_s: p.server_full_latency_s,
        deadline_s: p.deadline_s,
    };
    profile.validate()?;
    Ok(profile)
}

pub fn build_environment(
    cfg: &ExperimentConfig,
    net: &RecursiveEENetwork,
    pool: &Dataset,
) -> Result<Environment> {
    let samples = net
        .traces(pool)?
        .into_iter()
        .zip(&pool.labels)
        .map(|(trace, &label)| LabeledTrace { trace, label })
        .collect();
    Ok(Environment::new(samples, build_profile(cfg, net)?, cfg.link.clone())?)
}

/// Network, environment and held-out data, ready for policy runs.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub net: RecursiveEENetwork,
    pub report: TrainReport,
    pub data: SplitData,
    pub env: Environment,
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let data = prepare_data(cfg);
        let (net, report) = train_network(cfg, &data.train)?;
        Self::with_network(cfg, net, report, data)
    }

    pub fn with_network(
        cfg: &ExperimentConfig,
        net: RecursiveEENetwork,
        report: TrainReport,
        data: SplitData,
    ) -> Result<Self> {
        let env = build_environment(cfg, &net, &data.pool)?;
        Ok(Self { net, report, data, env })
    }
}

/// Test accuracy of each exit's own prediction.
pub fn exit_accuracies<M: ExitModel + ?Sized>(model: &M, data: &Dataset) -> Result<Vec<f64>> {
    let traces = model.traces(data)?;
    let exits = traces.first().map_or(0, |t| t.num_exits());
    let n = traces.len().max(1) as f64;
    Ok((0..exits)
        .map(|k| {
            traces
                .iter()
                .zip(&data.labels)
                .filter(|(t, &y)| t.prediction(k) == y)
                .count() as f64
                / n
        })
        .collect())
}

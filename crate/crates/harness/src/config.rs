//! Experiment configuration: one TOML document with a `version` field and one
//! section per subsystem. Every section is optional and falls back to the
//! reference setup; unknown keys are rejected.

use std::path::Path;

use goee::nn::{BackboneConfig, BlobSpec, MoonsSpec, SyntheticTask, TrainConfig};
use goee::policy::{AlphaSchedule, RewardConfig, RlConfig};
use goee::radio::LinkConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::HarnessError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default = "default_backbone")]
    pub backbone: BackboneConfig,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub link: LinkConfig,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub reward: RewardSection,
    #[serde(default)]
    pub rl: RlSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub fig2: Fig2Section,
}

fn default_seed() -> u64 {
    2024
}

fn default_backbone() -> BackboneConfig {
    let mut b = BackboneConfig::new(4, vec![64, 64, 48, 32, 24, 16], 4);
    b.head_dim = 16;
    b
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: default_seed(),
            data: DataConfig::default(),
            backbone: default_backbone(),
            train: TrainSection::default(),
            link: LinkConfig::default(),
            profile: ProfileSection::default(),
            reward: RewardSection::default(),
            rl: RlSection::default(),
            sweep: SweepSection::default(),
            fig2: Fig2Section::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    Blobs,
    Moons,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub kind: DataKind,
    /// Blobs only.
    pub clusters_per_class: usize,
    pub center_scale: f64,
    pub spread: f64,
    /// Moons only.
    pub noise: f64,
    pub train_size: usize,
    pub test_size: usize,
    /// Samples whose network traces feed the offloading episodes.
    pub pool_size: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            kind: DataKind::Blobs,
            clusters_per_class: 25,
            center_scale: 1.0,
            spread: 0.3,
            noise: 0.2,
            train_size: 6000,
            test_size: 3000,
            pool_size: 3000,
        }
    }
}

/// Training settings; the rng seed is derived from the global seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub margin: Option<f64>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            margin: Some(0.2),
            learning_rate: 0.01,
            momentum: t.momentum,
            epochs: 60,
            batch_size: t.batch_size,
        }
    }
}

impl TrainSection {
    pub fn to_train_config(&self, rng_seed: u64) -> TrainConfig {
        TrainConfig {
            margin: self.margin,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            epochs: self.epochs,
            batch_size: self.batch_size,
            rng_seed,
        }
    }
}

/// Split-computation profile. `flops_fractions` and `embedding_bits` are
/// derived from the trained network unless given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSection {
    pub flops_fractions: Option<Vec<f64>>,
    pub embedding_bits: Option<Vec<f64>>,
    /// Bits per hidden unit when embedding sizes are derived.
    pub bits_per_unit: f64,
    pub device_full_latency_s: f64,
    pub server_full_latency_s: f64,
    pub deadline_s: f64,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self {
            flops_fractions: None,
            embedding_bits: None,
            bits_per_unit: 8.0,
            device_full_latency_s: goee::latency::DEVICE_FULL_LATENCY_S,
            server_full_latency_s: goee::latency::SERVER_FULL_LATENCY_S,
            deadline_s: goee::latency::DEADLINE_S,
        }
    }
}

/// Reward weights. `m_th` and `gamma_comm` apply to single runs; sweeps take
/// theirs from `[sweep]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardSection {
    pub gamma_comp: f64,
    pub penalty: f64,
    pub m_th: f64,
    pub gamma_comm: f64,
}

impl Default for RewardSection {
    fn default() -> Self {
        Self {
            gamma_comp: 1.0,
            penalty: -1.0,
            m_th: 0.2,
            gamma_comm: 1.0,
        }
    }
}

impl RewardSection {
    pub fn reward_config(&self, m_th: f64, gamma_comm: f64) -> RewardConfig {
        RewardConfig {
            gamma_comm,
            gamma_comp: self.gamma_comp,
            m_th,
            penalty: self.penalty,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RlSection {
    #[serde(flatten)]
    pub agent: RlConfig,
    pub train_episodes: usize,
    pub eval_episodes: usize,
}

impl Default for RlSection {
    fn default() -> Self {
        Self {
            agent: RlConfig {
                alpha: 1.0,
                alpha_schedule: AlphaSchedule::InverseSqrtVisits,
                ..RlConfig::default()
            },
            train_episodes: 200_000,
            eval_episodes: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub m_th: Vec<f64>,
    pub gamma_comm: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            m_th: vec![0.09, 0.1, 0.2, 0.3],
            gamma_comm: vec![1.0, 1.5, 2.0, 2.5, 3.0, 3.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig2Section {
    pub margin_grid: Vec<f64>,
    pub probability_grid: Vec<f64>,
    pub patience_grid: Vec<usize>,
}

impl Default for Fig2Section {
    fn default() -> Self {
        Self {
            margin_grid: (1..=99).map(|i| i as f64 * 0.01).collect(),
            probability_grid: (50..=99)
                .map(|i| i as f64 * 0.01)
                .chain([0.995, 0.998, 0.999, 0.9995, 0.9999, 0.99995, 0.99999, 0.999995, 0.999999])
                .collect(),
            patience_grid: vec![1, 2, 3, 4, 5],
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn task(&self) -> SyntheticTask {
        match self.data.kind {
            DataKind::Blobs => SyntheticTask::Blobs(BlobSpec {
                input_dim: self.backbone.input_dim,
                num_classes: self.backbone.num_classes,
                clusters_per_class: self.data.clusters_per_class,
                center_scale: self.data.center_scale,
                spread: self.data.spread,
            }),
            DataKind::Moons => SyntheticTask::Moons(MoonsSpec {
                noise: self.data.noise,
            }),
        }
    }

    /// Validates every section, reporting the offending field.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let field = |name: &str, msg: String| Err(HarnessError::Field(name.to_string(), msg));
        if self.version != CONFIG_VERSION {
            return field(
                "version",
                format!("unsupported version {}, expected {CONFIG_VERSION}", self.version),
            );
        }
        if let Err(e) = self.backbone.validate() {
            return field("backbone", e.to_string());
        }
        let d = &self.data;
        if d.train_size == 0 || d.test_size == 0 || d.pool_size == 0 {
            return field("data", "train_size, test_size and pool_size must be positive".into());
        }
        match d.kind {
            DataKind::Blobs => {
                if d.clusters_per_class == 0 {
                    return field("data.clusters_per_class", "must be positive".into());
                }
                if !(d.spread > 0.0) || !(d.center_scale > 0.0) {
                    return field("data", "spread and center_scale must be positive".into());
                }
            }
            DataKind::Moons => {
                if self.backbone.input_dim != 2 || self.backbone.num_classes != 2 {
                    return field("backbone", "moons need input_dim = 2 and num_classes = 2".into());
                }
                if !(d.noise >= 0.0) {
                    return field("data.noise", "must be nonnegative".into());
                }
            }
        }
        if let Err(e) = self
            .train
            .to_train_config(0)
            .validate(self.backbone.num_classes)
        {
            return field("train", e.to_string());
        }
        if let Err(e) = self.link.validate() {
            return field("link", e.to_string());
        }
        let p = &self.profile;
        let exits = self.backbone.num_exits();
        for (name, v) in [("profile.flops_fractions", &p.flops_fractions), ("profile.embedding_bits", &p.embedding_bits)] {
            if let Some(v) = v {
                if v.len() != exits {
                    return field(name, format!("has {} entries, network has {exits} exits", v.len()));
                }
            }
        }
        if !(p.bits_per_unit > 0.0) {
            return field("profile.bits_per_unit", "must be positive".into());
        }
        for (name, v) in [
            ("profile.device_full_latency_s", p.device_full_latency_s),
            ("profile.server_full_latency_s", p.server_full_latency_s),
            ("profile.deadline_s", p.deadline_s),
        ] {
            if !(v > 0.0) {
                return field(name, format!("must be positive, got {v}"));
            }
        }
        if let Err(e) = self
            .reward
            .reward_config(self.reward.m_th, self.reward.gamma_comm)
            .validate()
        {
            return field("reward", e.to_string());
        }
        if let Err(e) = self.rl.agent.validate() {
            return field("rl", e.to_string());
        }
        if self.rl.train_episodes == 0 || self.rl.eval_episodes == 0 {
            return field("rl", "train_episodes and eval_episodes must be positive".into());
        }
        if self.sweep.m_th.is_empty() {
            return field("sweep.m_th", "must not be empty".into());
        }
        if self.sweep.gamma_comm.is_empty() {
            return field("sweep.gamma_comm", "must not be empty".into());
        }
        for &m in &self.sweep.m_th {
            if !(m > 0.0 && m < 1.0) {
                return field("sweep.m_th", format!("{m} is outside (0,1)"));
            }
        }
        for &g in &self.sweep.gamma_comm {
            if !(g >= 0.0 && g.is_finite()) {
                return field("sweep.gamma_comm", format!("{g} is negative"));
            }
        }
        let f = &self.fig2;
        if f.margin_grid.is_empty() || f.probability_grid.is_empty() || f.patience_grid.is_empty() {
            return field("fig2", "grids must not be empty".into());
        }
        if f.margin_grid.iter().chain(&f.probability_grid).any(|&t| !(t > 0.0 && t <= 1.0)) {
            return field("fig2", "thresholds must be in (0,1]".into());
        }
        if f.patience_grid.contains(&0) {
            return field("fig2.patience_grid", "patience must be >= 1".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(&json))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Stable seed derivation: the first 8 bytes of SHA-256 over the global seed
/// and a list of labelled parts.
pub fn derive_seed(global: u64, parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    h.update(global.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Seed of one sweep point, a function of the global seed and the point only.
pub fn sweep_point_seed(global: u64, m_th: f64, gamma_comm: f64) -> u64 {
    derive_seed(
        global,
        &[b"policy", &m_th.to_bits().to_le_bytes(), &gamma_comm.to_bits().to_le_bytes()],
    )
}

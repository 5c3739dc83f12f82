//! Synthetic classification tasks used in place of an image benchmark.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{NetError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(NetError::InvalidConfig(format!(
                "{} inputs but {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(NetError::InvalidClass {
                label: y,
                num_classes,
            });
        }
        Ok(Self {
            inputs,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }
}

/// Gaussian blobs: each class is a mixture of `clusters_per_class` isotropic
/// Gaussians with centers drawn from `N(0, center_scale^2 I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub input_dim: usize,
    pub num_classes: usize,
    pub clusters_per_class: usize,
    pub center_scale: f64,
    pub spread: f64,
}

/// Two interleaved half circles in the plane, with Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoonsSpec {
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SyntheticTask {
    Blobs(BlobSpec),
    Moons(MoonsSpec),
}

impl SyntheticTask {
    pub fn input_dim(&self) -> usize {
        match self {
            SyntheticTask::Blobs(b) => b.input_dim,
            SyntheticTask::Moons(_) => 2,
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            SyntheticTask::Blobs(b) => b.num_classes,
            SyntheticTask::Moons(_) => 2,
        }
    }

    /// Draws `n` labelled samples. `task_seed` fixes the task geometry (blob
    /// centers), `sample_seed` the draw, so train and test splits share one
    /// task.
    pub fn sample(&self, task_seed: u64, sample_seed: u64, n: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
        let c = self.num_classes();
        let mut inputs = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        match self {
            SyntheticTask::Blobs(spec) => {
                let centers = blob_centers(spec, task_seed);
                for i in 0..n {
                    let y = i % c;
                    let cluster = rng.random_range(0..spec.clusters_per_class);
                    let center = &centers[y * spec.clusters_per_class + cluster];
                    let x = center
                        .iter()
                        .map(|&m| m + spec.spread * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    inputs.push(x);
                    labels.push(y);
                }
            }
            SyntheticTask::Moons(spec) => {
                for i in 0..n {
                    let y = i % 2;
                    let t = rng.random_range(0.0..std::f64::consts::PI);
                    let (mut a, mut b) = if y == 0 {
                        (t.cos(), t.sin())
                    } else {
                        (1.0 - t.cos(), 0.5 - t.sin())
                    };
                    a += spec.noise * rng.sample::<f64, _>(StandardNormal);
                    b += spec.noise * rng.sample::<f64, _>(StandardNormal);
                    inputs.push(vec![a, b]);
                    labels.push(y);
                }
            }
        }
        Dataset {
            inputs,
            labels,
            num_classes: c,
        }
    }
}

fn blob_centers(spec: &BlobSpec, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..spec.num_classes * spec.clusters_per_class)
        .map(|_| {
            (0..spec.input_dim)
                .map(|_| spec.center_scale * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect()
}

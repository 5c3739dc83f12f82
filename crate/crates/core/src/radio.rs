//! Single-link channel model: distance-based path loss, Rayleigh block
//! fading, Shannon capacity and MCS selection.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("invalid link config: {0}")]
    InvalidConfig(String),
}

/// How the device distance is drawn for each frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Uniform over the annulus area: density proportional to `d`.
    UniformArea,
    /// Uniform in distance.
    UniformDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub pathloss_exponent: f64,
    pub tx_power_w: f64,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub distance_min_m: f64,
    pub distance_max_m: f64,
    pub placement: Placement,
    /// Spectral efficiencies in bit/s/Hz, ascending, starting at 0.
    pub mcs_set: Vec<f64>,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 3.5e9,
            bandwidth_hz: 20e6,
            pathloss_exponent: 3.5,
            tx_power_w: 0.1,
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 7.0,
            distance_min_m: 10.0,
            distance_max_m: 100.0,
            placement: Placement::UniformArea,
            mcs_set: vec![0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0],
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<(), LinkError> {
        let bad = |m: String| Err(LinkError::InvalidConfig(m));
        for (name, v) in [
            ("carrier_hz", self.carrier_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("pathloss_exponent", self.pathloss_exponent),
            ("tx_power_w", self.tx_power_w),
            ("distance_min_m", self.distance_min_m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.distance_min_m < self.distance_max_m && self.distance_max_m.is_finite()) {
            return bad(format!(
                "distance_min_m ({}) must be below distance_max_m ({})",
                self.distance_min_m, self.distance_max_m
            ));
        }
        if self.mcs_set.first() != Some(&0.0) {
            return bad("mcs_set must start at 0".into());
        }
        if self.mcs_set.windows(2).any(|w| w[0] >= w[1]) {
            return bad("mcs_set must be strictly ascending".into());
        }
        Ok(())
    }

    /// Thermal noise over the whole band, in watts.
    pub fn noise_power_w(&self) -> f64 {
        let dbm = self.noise_psd_dbm_hz + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db;
        10f64.powf((dbm - 30.0) / 10.0)
    }

    /// SNR with unit fading gain.
    pub fn mean_snr(&self, distance_m: f64) -> Result<f64, LinkError> {
        Ok(self.tx_power_w * pathloss(self, distance_m)? / self.noise_power_w())
    }

    pub fn num_mcs(&self) -> usize {
        self.mcs_set.len()
    }
}

/// Realization of the link for one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDraw {
    pub distance_m: f64,
    pub pathloss_linear: f64,
    pub fading_gain: f64,
    pub snr_linear: f64,
    pub capacity_bps_hz: f64,
    pub mcs_index: usize,
    pub rate_bps: f64,
}

/// `(c / (4 pi f_c))^2 d^-alpha`.
pub fn pathloss(cfg: &LinkConfig, distance_m: f64) -> Result<f64, LinkError> {
    if !(distance_m > 0.0) {
        return Err(LinkError::NonPositiveDistance(distance_m));
    }
    let ref_gain = (SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * cfg.carrier_hz)).powi(2);
    Ok(ref_gain * distance_m.powf(-cfg.pathloss_exponent))
}

/// Index of the largest spectral efficiency not exceeding `capacity`.
pub fn select_mcs(mcs_set: &[f64], capacity: f64) -> usize {
    mcs_set.partition_point(|&m| m <= capacity).saturating_sub(1)
}

pub fn draw_distance<R: Rng + ?Sized>(cfg: &LinkConfig, rng: &mut R) -> f64 {
    let (lo, hi) = (cfg.distance_min_m, cfg.distance_max_m);
    let u: f64 = rng.random();
    match cfg.placement {
        Placement::UniformArea => (lo * lo + u * (hi * hi - lo * lo)).sqrt(),
        Placement::UniformDistance => lo + u * (hi - lo),
    }
}

pub fn draw_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

/// Channel at a given distance and fading power gain.
pub fn channel_at(cfg: &LinkConfig, distance_m: f64, fading_gain: f64) -> Result<ChannelDraw, LinkError> {
    let pl = pathloss(cfg, distance_m)?;
    let snr = cfg.tx_power_w * pl * fading_gain / cfg.noise_power_w();
    let capacity = (1.0 + snr).log2();
    let mcs_index = select_mcs(&cfg.mcs_set, capacity);
    Ok(ChannelDraw {
        distance_m,
        pathloss_linear: pl,
        fading_gain,
        snr_linear: snr,
        capacity_bps_hz: capacity,
        mcs_index,
        rate_bps: cfg.mcs_set[mcs_index] * cfg.bandwidth_hz,
    })
}

/// Fresh distance and fading.
pub fn draw_channel<R: Rng + ?Sized>(cfg: &LinkConfig, rng: &mut R) -> ChannelDraw {
    let d = draw_distance(cfg, rng);
    let g = draw_fading(rng);
    channel_at(cfg, d, g).expect("sampled distance is positive")
}

/// Redraws only the fading at a fixed distance and returns the new MCS.
pub fn mcs_transition_sample<R: Rng + ?Sized>(
    cfg: &LinkConfig,
    distance_m: f64,
    rng: &mut R,
) -> Result<usize, LinkError> {
    let g = draw_fading(rng);
    Ok(channel_at(cfg, distance_m, g)?.mcs_index)
}

pub fn rate_bps(cfg: &LinkConfig, mcs_index: usize) -> f64 {
    cfg.mcs_set[mcs_index] * cfg.bandwidth_hz
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_distance_is_free_space_reference() {
        let cfg = LinkConfig { pathloss_exponent: 2.7, ..LinkConfig::default() };
        let expected = (SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * 3.5e9)).powi(2);
        assert_eq!(pathloss(&cfg, 1.0).unwrap(), expected);
    }

    #[test]
    fn nonpositive_distance_is_an_error() {
        let cfg = LinkConfig::default();
        assert_eq!(pathloss(&cfg, 0.0), Err(LinkError::NonPositiveDistance(0.0)));
        assert!(pathloss(&cfg, -3.0).is_err());
    }

    #[test]
    fn deep_fade_gives_zero_rate() {
        let ch = channel_at(&LinkConfig::default(), 50.0, 0.0).unwrap();
        assert_eq!(ch.snr_linear, 0.0);
        assert_eq!(ch.capacity_bps_hz, 0.0);
        assert_eq!(ch.mcs_index, 0);
        assert_eq!(ch.rate_bps, 0.0);
    }

    #[test]
    fn mcs_is_largest_not_above_capacity() {
        let set = LinkConfig::default().mcs_set;
        assert_eq!(set[select_mcs(&set, 2.5)], 2.0);
        assert_eq!(set[select_mcs(&set, 2.0)], 2.0);
        assert_eq!(select_mcs(&set, 0.49), 0);
        assert_eq!(set[select_mcs(&set, 17.0)], 5.0);
    }

    #[test]
    fn noise_floor_matches_link_budget() {
        // -174 + 10 log10(20e6) + 7 = -93.9897 dBm
        let n = LinkConfig::default().noise_power_w();
        let dbm = 10.0 * (n * 1e3).log10();
        assert!((dbm + 93.989_700_043_360_19).abs() < 1e-9, "{dbm}");
    }

    #[test]
    fn transitions_are_reproducible() {
        let cfg = LinkConfig::default();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| mcs_transition_sample(&cfg, 40.0, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
    }

    #[test]
    fn config_validation() {
        let mut cfg = LinkConfig::default();
        cfg.validate().unwrap();
        cfg.mcs_set = vec![0.5, 1.0];
        assert!(cfg.validate().is_err());
        cfg.mcs_set = vec![0.0, 2.0, 1.0];
        assert!(cfg.validate().is_err());
        let cfg = LinkConfig { distance_min_m: 100.0, distance_max_m: 10.0, ..LinkConfig::default() };
        assert!(cfg.validate().is_err());
    }
}

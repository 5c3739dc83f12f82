//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the library's numerics; it only
//! reads public parameters and builds inputs.
#![allow(dead_code)]

use goee::latency::SystemProfile;
use goee::nn::{BackboneConfig, Linear, PredictionTrace, RecursiveEENetwork};
use goee::policy::{step, Action, Environment, LabeledTrace, MdpState, RewardConfig, StepOutcome};
use goee::radio::{LinkConfig, Placement};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Explicit double loop over the row-major weights.
pub fn affine(l: &Linear, x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(l.out_dim);
    for o in 0..l.out_dim {
        let mut acc = l.bias[o];
        for (i, v) in x.iter().enumerate().take(l.in_dim) {
            acc += l.weight[o * l.in_dim + i] * v;
        }
        out.push(acc);
    }
    out
}

pub fn stable_softmax(z: &[f64]) -> Vec<f64> {
    let top = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - top).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Output of the straight-line evaluation plus how close the input sits to
/// any ReLU kink.
pub struct Straight {
    pub probs: Vec<Vec<f64>>,
    pub softmax: Vec<f64>,
    pub min_relu_gap: f64,
}

/// Recursion written case by case: exit 0 is a sigmoid predictor, middle
/// exits move mass, the last one fills the remaining mass with a softmax.
pub fn straight_line(net: &RecursiveEENetwork, x: &[f64]) -> Straight {
    let mut gap = f64::INFINITY;
    let mut relu = |v: Vec<f64>| -> Vec<f64> {
        for &z in &v {
            gap = gap.min(z.abs());
        }
        v.into_iter().map(|z| if z > 0.0 { z } else { 0.0 }).collect()
    };
    let mut hidden = Vec::new();
    let mut cur = x.to_vec();
    for b in &net.backbone.blocks {
        cur = relu(affine(b, &cur));
        hidden.push(cur.clone());
    }
    let feats: Vec<Vec<f64>> = net
        .backbone
        .features
        .iter()
        .zip(&net.backbone.exit_blocks)
        .map(|(f, &blk)| relu(affine(f, &hidden[blk])))
        .collect();
    let e = feats.len();
    let mut probs: Vec<Vec<f64>> = Vec::new();
    for i in 0..e {
        let next = if i == 0 {
            affine(&net.first_head, &feats[0]).into_iter().map(logistic).collect()
        } else if i < e - 1 {
            let (pos, neg) = &net.mass_heads[i - 1];
            let mp = affine(pos, &feats[i]);
            let mn = affine(neg, &feats[i]);
            let prev = &probs[i - 1];
            (0..prev.len())
                .map(|c| {
                    let f = prev[c];
                    f + (1.0 - f) * logistic(mp[c]) - f * logistic(mn[c])
                })
                .collect()
        } else {
            let q = stable_softmax(&affine(&net.final_head, &feats[i]));
            let prev = &probs[i - 1];
            (0..prev.len()).map(|c| prev[c] + (1.0 - prev[c]) * q[c]).collect()
        };
        probs.push(next);
    }
    let softmax = stable_softmax(&affine(&net.final_head, &feats[e - 1]));
    Straight {
        probs,
        softmax,
        min_relu_gap: gap,
    }
}

/// Largest wrong-class probability and the runner-up among wrong classes.
fn wrong_top_two(p: &[f64], y: usize) -> (f64, f64) {
    let mut v: Vec<f64> = p.iter().enumerate().filter(|(j, _)| *j != y).map(|(_, &q)| q).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (v[0], v.get(1).copied().unwrap_or(f64::NEG_INFINITY))
}

/// `-ln q_y + mean over early exits of max(0, H - f_y + m)`.
pub fn reference_loss(s: &Straight, y: usize, m: f64) -> f64 {
    let early = &s.probs[..s.probs.len() - 1];
    let hinge: f64 = early
        .iter()
        .map(|p| (wrong_top_two(p, y).0 - p[y] + m).max(0.0))
        .sum();
    -s.softmax[y].ln() + hinge / early.len() as f64
}

/// Distance from every nondifferentiable point of the loss: hinge kinks and
/// ties between the two largest wrong-class probabilities.
pub fn hinge_gap(s: &Straight, y: usize, m: f64) -> f64 {
    let mut gap = f64::INFINITY;
    for p in &s.probs[..s.probs.len() - 1] {
        let (h, h2) = wrong_top_two(p, y);
        gap = gap.min((h - p[y] + m).abs()).min(h - h2);
    }
    gap
}

/// Number of early exits whose hinge is active.
pub fn active_hinges(s: &Straight, y: usize, m: f64) -> usize {
    s.probs[..s.probs.len() - 1]
        .iter()
        .filter(|p| wrong_top_two(p, y).0 - p[y] + m > 0.0)
        .count()
}

pub struct GradientCase {
    pub net: RecursiveEENetwork,
    pub x: Vec<f64>,
    pub y: usize,
    pub m: f64,
}

/// Random small network, input and margin. `seed % 3` picks the hinge
/// regime: all inactive, all active, or a margin drawn in (0,1).
pub fn gradient_case(seed: u64) -> GradientCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = rng.random_range(2..=4);
    let hidden: Vec<usize> = (0..blocks).map(|_| rng.random_range(3..=6)).collect();
    let mut cfg = BackboneConfig::new(rng.random_range(2..=4), hidden, rng.random_range(2..=4));
    cfg.head_dim = rng.random_range(2..=4);
    let m = match seed % 3 {
        0 => -1.0,
        1 => 1.5,
        _ => rng.random_range(0.0..1.0),
    };
    loop {
        let mut net = RecursiveEENetwork::new(cfg.clone(), rng.random()).unwrap();
        for l in net.backbone.blocks.iter_mut().chain(net.backbone.features.iter_mut()) {
            l.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
        }
        for _ in 0..200 {
            let x: Vec<f64> = (0..cfg.input_dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y = rng.random_range(0..cfg.num_classes);
            let s = straight_line(&net, &x);
            if s.min_relu_gap > 1e-3 && hinge_gap(&s, y, m) > 1e-3 {
                return GradientCase { net, x, y, m };
            }
        }
    }
}

/// Worst coordinate-wise relative error between the analytic gradient and
/// central differences of the reference loss. The denominator is floored at
/// `floor` so coordinates that are zero up to rounding compare absolutely.
pub fn gradient_error(case: &GradientCase, h: f64, floor: f64) -> f64 {
    let (_, grad) = case.net.loss_gradient(&case.x, case.y, case.m).unwrap();
    let analytic: Vec<f64> = grad.tensors().into_iter().flatten().copied().collect();
    let mut probe = case.net.clone();
    let mut numeric = Vec::with_capacity(analytic.len());
    let shapes: Vec<usize> = probe.tensors().iter().map(|t| t.len()).collect();
    for (t, &len) in shapes.iter().enumerate() {
        for j in 0..len {
            let orig = probe.tensors()[t][j];
            probe.tensors_mut()[t][j] = orig + h;
            let up = reference_loss(&straight_line(&probe, &case.x), case.y, case.m);
            probe.tensors_mut()[t][j] = orig - h;
            let down = reference_loss(&straight_line(&probe, &case.x), case.y, case.m);
            probe.tensors_mut()[t][j] = orig;
            numeric.push((up - down) / (2.0 * h));
        }
    }
    assert_eq!(numeric.len(), analytic.len());
    analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Linear scan for the largest set element not above `capacity`.
pub fn brute_force_mcs(set: &[f64], capacity: f64) -> usize {
    let mut best = 0;
    for (i, &v) in set.iter().enumerate() {
        if v <= capacity && v >= set[best] {
            best = i;
        }
    }
    best
}

/// Capacity recomputed from the link budget in dB.
pub fn capacity_db_route(cfg: &LinkConfig, distance_m: f64, fading: f64) -> f64 {
    let lambda = 299_792_458.0 / cfg.carrier_hz;
    let pl_db = 20.0 * (lambda / (4.0 * std::f64::consts::PI)).log10()
        - 10.0 * cfg.pathloss_exponent * distance_m.log10();
    let tx_dbm = 10.0 * (cfg.tx_power_w * 1e3).log10();
    let noise_dbm = cfg.noise_psd_dbm_hz + cfg.noise_figure_db + 10.0 * cfg.bandwidth_hz.log10();
    let snr = 10f64.powf((tx_dbm + pl_db - noise_dbm) / 10.0) * fading;
    (1.0 + snr).ln() / std::f64::consts::LN_2
}

/// `F_k D_l + [offload] (N_k / R + (1 - F_k) D_r)` in milliseconds.
pub fn delay_ms(frac: f64, bits: f64, rate_bps: f64, offload: bool, dev_ms: f64, srv_ms: f64) -> f64 {
    let local = dev_ms * frac;
    if !offload {
        return local;
    }
    local + 1e3 * bits / rate_bps + srv_ms - srv_ms * frac
}

/// Four exits where only an offload right after exit 1 beats the deadline
/// with a confident result: every local exit has zero margin, exit 0's
/// payload is too large to ship in time, exit 2 leaves too little slack and
/// full local inference takes 50 ms against a 40 ms deadline.
pub fn rigged_environment() -> Environment {
    let trace = PredictionTrace::new(
        vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5], vec![0.95, 0.05]],
        vec![0.9, 0.1],
    );
    let samples = vec![LabeledTrace { trace, label: 0 }];
    let profile = SystemProfile::new(vec![0.2, 0.4, 0.75, 1.0], vec![3e6, 1e5, 1e5, 1e5]);
    let link = LinkConfig {
        tx_power_w: 100.0,
        distance_min_m: 1.0,
        distance_max_m: 1.001,
        placement: Placement::UniformDistance,
        ..LinkConfig::default()
    };
    Environment::new(samples, profile, link).unwrap()
}

pub const RIGGED_OPTIMUM: [Action; 2] = [Action::Compute, Action::Offload];

/// Expected return of a stationary deterministic policy on the states the
/// rigged environment reaches, `(k, top MCS)`. With the 1 m link, a slot
/// drops below the top MCS with probability `1 - exp(-31 / snr) ~ 3e-9`, so
/// the return is exact up to that event; the assertion inside guards it.
pub fn rigged_return(env: &Environment, reward: &RewardConfig, policy: &[Action]) -> f64 {
    let top = env.link.num_mcs() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut total = 0.0;
    for sample in &env.samples {
        let mut state = MdpState {
            exit_index: 0,
            mcs_index: top,
        };
        loop {
            match step(env, state, policy[state.exit_index], sample, 1.0, reward, &mut rng).unwrap() {
                StepOutcome::Continue(next) => {
                    assert_eq!(next.mcs_index, top);
                    state = next;
                }
                StepOutcome::Terminal(out) => {
                    total += out.reward;
                    break;
                }
            }
        }
    }
    total / env.samples.len() as f64
}

/// Every stationary deterministic policy over `(k, top MCS)` with its
/// return. Offload is unavailable at the last exit.
pub fn enumerate_rigged(env: &Environment, reward: &RewardConfig) -> Vec<(Vec<Action>, f64)> {
    let k_max = env.last_exit();
    let all = [Action::Exit, Action::Compute, Action::Offload];
    let mut policies: Vec<Vec<Action>> = vec![vec![]];
    for k in 0..=k_max {
        let opts: &[Action] = if k == k_max { &all[..2] } else { &all };
        policies = policies
            .into_iter()
            .flat_map(|p| {
                opts.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    policies
        .into_iter()
        .map(|p| {
            let v = rigged_return(env, reward, &p);
            (p, v)
        })
        .collect()
}

mod oracle;

use goee::nn::{margin_loss, BackboneConfig, RecursiveEENetwork};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_net(seed: u64) -> RecursiveEENetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = rng.random_range(2..=5);
    let hidden = (0..blocks).map(|_| rng.random_range(2..=8)).collect();
    let mut cfg = BackboneConfig::new(rng.random_range(1..=5), hidden, rng.random_range(2..=6));
    cfg.head_dim = rng.random_range(1..=6);
    RecursiveEENetwork::new(cfg, seed).unwrap()
}

#[test]
fn matches_straight_line_recursion() {
    let small = RecursiveEENetwork::new(BackboneConfig::new(3, vec![5, 4], 3), 7).unwrap();
    let x = [0.3, -1.2, 0.8];
    let got = small.forward_recursive(&x).unwrap();
    let want = oracle::straight_line(&small, &x);
    for (a, b) in got.per_exit_probs.iter().flatten().zip(want.probs.iter().flatten()) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }

    for seed in 0..200 {
        let net = random_net(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let x: Vec<f64> = (0..net.config.input_dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let got = net.forward_recursive(&x).unwrap();
        let want = oracle::straight_line(&net, &x);
        assert_eq!(got.num_exits(), want.probs.len());
        for (a, b) in got.per_exit_probs.iter().flatten().zip(want.probs.iter().flatten()) {
            assert!((a - b).abs() <= 1e-12, "seed {seed}: {a} vs {b}");
        }
        for (a, b) in got.final_distribution.iter().zip(&want.softmax) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn loss_matches_reference_sum() {
    for seed in 0..50 {
        let net = random_net(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..net.config.input_dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y = rng.random_range(0..net.config.num_classes);
        let m = rng.random_range(0.0..1.0);
        let got = margin_loss(&net.forward_recursive(&x).unwrap(), y, m).unwrap();
        let want = oracle::reference_loss(&oracle::straight_line(&net, &x), y, m);
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{got} vs {want}");
        let (from_grad, _) = net.loss_gradient(&x, y, m).unwrap();
        assert!((from_grad - want).abs() <= 1e-12 * want.abs().max(1.0));
    }
}

#[test]
fn identical_seeds_give_identical_traces() {
    let a = random_net(11);
    let b = random_net(11);
    let x = vec![0.5; a.config.input_dim];
    assert_eq!(a.forward_recursive(&x).unwrap(), b.forward_recursive(&x).unwrap());
}

proptest! {
    #[test]
    fn probabilities_stay_in_unit_interval(
        seed in any::<u64>(),
        scale in prop_oneof![Just(1.0), Just(100.0), Just(1e6)],
        raw in prop::collection::vec(-1.0f64..1.0, 5),
    ) {
        let net = random_net(seed);
        let x: Vec<f64> = raw[..net.config.input_dim].iter().map(|v| v * scale).collect();
        let t = net.forward_recursive(&x).unwrap();
        for p in t.per_exit_probs.iter().flatten() {
            prop_assert!((0.0..=1.0).contains(p), "{p}");
        }
        for m in &t.per_exit_margin {
            prop_assert!((0.0..=1.0).contains(m));
        }
    }

    #[test]
    fn final_exit_only_adds_mass(seed in any::<u64>(), raw in prop::collection::vec(-3.0f64..3.0, 5)) {
        let net = random_net(seed);
        let t = net.forward_recursive(&raw[..net.config.input_dim]).unwrap();
        let n = t.num_exits();
        for (last, prev) in t.per_exit_probs[n - 1].iter().zip(&t.per_exit_probs[n - 2]) {
            prop_assert!(last >= prev);
        }
    }
}

mod oracle;

use goee::latency::{comm_saving, comp_saving, delay, proxy_goal, SystemProfile, Termination};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_profile(rng: &mut ChaCha8Rng) -> SystemProfile {
    let n = rng.random_range(2..=8);
    let mut fracs: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.01..1.0)).collect();
    fracs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    fracs.dedup();
    fracs.push(1.0);
    let bits = fracs.iter().map(|_| rng.random_range(1e3..1e7)).collect();
    SystemProfile::new(fracs, bits)
}

#[test]
fn random_tuples_match_independent_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let p = random_profile(&mut rng);
        let k = rng.random_range(0..p.num_exits());
        let offload = rng.random_bool(0.5);
        let rate = rng.random_range(1e5..2e8);
        let d = delay(&p, k, offload, rate).unwrap();
        let want = oracle::delay_ms(
            p.flops_fractions[k],
            p.embedding_bits[k],
            rate,
            offload,
            p.device_full_latency_s * 1e3,
            p.server_full_latency_s * 1e3,
        );
        let got = d.total_s * 1e3;
        assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
        assert!(d.local_s >= 0.0 && d.tx_s >= 0.0 && d.remote_s >= 0.0);
        assert_eq!(d.total_s, d.local_s + d.tx_s + d.remote_s);
        assert_eq!(d.met_deadline, d.total_s <= p.deadline_s);
    }
}

#[test]
fn reference_offload_takes_thirty_ms() {
    let p = SystemProfile::new(vec![0.4, 1.0], vec![40e3, 0.0]);
    assert_eq!(p.device_full_latency_s, 0.050);
    assert_eq!(p.server_full_latency_s, 0.010);
    let d = delay(&p, 0, true, 10e6).unwrap();
    assert!((d.total_s - 0.030).abs() <= 4.0 * f64::EPSILON * 0.030, "{}", d.total_s);
    assert!((d.local_s - 0.020).abs() <= f64::EPSILON * 0.02);
    assert!((d.tx_s - 0.004).abs() <= f64::EPSILON * 0.004);
    assert!((d.remote_s - 0.006).abs() <= f64::EPSILON * 0.006);
}

#[test]
fn comp_saving_is_one_minus_fraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let p = random_profile(&mut rng);
        for k in 0..p.num_exits() {
            assert_eq!(comp_saving(&p, k).unwrap(), 1.0 - p.flops_fractions[k]);
            if k > 0 {
                assert!(comp_saving(&p, k).unwrap() <= comp_saving(&p, k - 1).unwrap());
            }
        }
    }
}

#[test]
fn comm_saving_on_tapered_payloads() {
    let p = SystemProfile::new(vec![0.25, 0.5, 0.75, 1.0], vec![8e3, 8e3, 4e3, 4e3]);
    assert_eq!(comm_saving(&p, 2, Termination::Offload).unwrap(), 0.5);
    assert_eq!(comm_saving(&p, 0, Termination::Offload).unwrap(), 0.0);
    for k in 0..4 {
        assert_eq!(comm_saving(&p, k, Termination::LocalExit).unwrap(), 1.0);
    }
}

proptest! {
    #[test]
    fn proxy_goal_is_monotone(
        frac in 0.01f64..1.0,
        rate in 1e5f64..1e8,
        margin in 0.0f64..1.0,
        m_th in 0.0f64..1.0,
        lower in 0.0f64..1.0,
        deadline in 0.005f64..0.08,
        extra in 0.0f64..0.05,
    ) {
        let mut p = SystemProfile::new(vec![frac, 1.0], vec![1e5, 1e4]);
        p.deadline_s = deadline;
        let d = delay(&p, 0, true, rate).unwrap();
        let met = proxy_goal(&d, margin, m_th);
        if met {
            prop_assert!(proxy_goal(&d, margin, m_th * lower));
            p.deadline_s = deadline + extra;
            let relaxed = delay(&p, 0, true, rate).unwrap();
            prop_assert!(proxy_goal(&relaxed, margin, m_th));
        }
    }
}

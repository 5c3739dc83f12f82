use goee::nn::{
    evaluate_flops_accuracy, halt_decision, halting_exit, BackboneConfig, ExitModel, HaltingPolicy,
    RecursiveEENetwork, SyntheticTask,
};
use goee::nn::BlobSpec;

fn setup() -> (RecursiveEENetwork, goee::nn::Dataset) {
    let task = SyntheticTask::Blobs(BlobSpec {
        input_dim: 3,
        num_classes: 4,
        clusters_per_class: 3,
        center_scale: 1.0,
        spread: 0.4,
    });
    let data = task.sample(1, 2, 2000);
    let mut cfg = BackboneConfig::new(3, vec![16, 12, 8, 8], 4);
    cfg.head_dim = 6;
    (RecursiveEENetwork::new(cfg, 3).unwrap(), data)
}

#[test]
fn halting_sets_are_nested() {
    let (net, data) = setup();
    let grid = [0.05, 0.1, 0.2, 0.4, 0.8];
    let traces = net.traces(&data).unwrap();
    for t in &traces {
        for w in grid.windows(2) {
            let (lo, hi) = (HaltingPolicy::recursive_margin(w[0]), HaltingPolicy::recursive_margin(w[1]));
            for i in 0..t.num_exits() {
                if halt_decision(t, i, &hi, None).unwrap() {
                    assert!(halt_decision(t, i, &lo, None).unwrap());
                }
            }
            assert!(halting_exit(t, &lo) <= halting_exit(t, &hi));
        }
    }
}

#[test]
fn degenerate_thresholds() {
    let (net, data) = setup();
    let fr = net.flops_fractions();
    let pts = evaluate_flops_accuracy(
        &net,
        &data,
        &[HaltingPolicy::recursive_margin(1.0), HaltingPolicy::recursive_margin(1e-300)],
    )
    .unwrap();
    assert_eq!(pts[0].flops_fraction, 1.0);
    let halted_first = net
        .traces(&data)
        .unwrap()
        .iter()
        .filter(|t| t.per_exit_margin[0] > 1e-300)
        .count();
    assert_eq!(halted_first, data.len());
    assert!((pts[1].flops_fraction - fr[0]).abs() < 1e-12);
}

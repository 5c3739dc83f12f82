use goee_harness::sweep::run_point;
use goee_harness::{
    read_exit_hist, read_tradeoff, run_sweep, write_exit_hist, write_tradeoff, ExperimentConfig, Prepared,
};

fn tiny() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.data.train_size = 400;
    cfg.data.test_size = 200;
    cfg.data.pool_size = 200;
    cfg.backbone.hidden_dims = vec![12, 12, 8, 8];
    cfg.backbone.head_dim = 6;
    cfg.train.epochs = 2;
    cfg.rl.train_episodes = 1000;
    cfg.rl.eval_episodes = 300;
    cfg
}

#[test]
fn default_grid_has_twenty_four_points_that_round_trip() {
    let cfg = tiny();
    let prepared = Prepared::new(&cfg).unwrap();
    let result = run_sweep(&cfg, &prepared, 2).unwrap();
    assert_eq!(result.rows.len(), 24);
    assert_eq!(result.fingerprint, cfg.fingerprint());

    let trade = result.tradeoff_rows();
    let hist = result.exit_hist_rows();
    let mut buf = Vec::new();
    write_tradeoff(&mut buf, &trade).unwrap();
    assert_eq!(read_tradeoff(buf.as_slice()).unwrap(), trade);
    let mut buf = Vec::new();
    write_exit_hist(&mut buf, &hist).unwrap();
    assert_eq!(read_exit_hist(buf.as_slice()).unwrap(), hist);
    assert_eq!(hist.len(), 24 * 2 * prepared.net.num_exits());
}

#[test]
fn single_point_rerun_is_identical_and_independent_of_the_grid() {
    let mut cfg = tiny();
    cfg.sweep.m_th = vec![0.2];
    cfg.sweep.gamma_comm = vec![2.0];
    let prepared = Prepared::new(&cfg).unwrap();
    let a = run_sweep(&cfg, &prepared, 1).unwrap();
    let b = run_sweep(&cfg, &prepared, 1).unwrap();
    assert_eq!(a.rows.len(), 1);
    assert_eq!(a.rows, b.rows);

    cfg.sweep.m_th = vec![0.1, 0.2];
    cfg.sweep.gamma_comm = vec![1.0, 2.0];
    let wide = run_sweep(&cfg, &prepared, 1).unwrap();
    let same = wide.rows.iter().find(|r| r.m_th == 0.2 && r.gamma_comm == 2.0).unwrap();
    assert_eq!(same, &a.rows[0]);
}

#[test]
fn learning_improves_on_the_reference_config() {
    let cfg = ExperimentConfig::default();
    let prepared = Prepared::new(&cfg).unwrap();
    let (_, _, curve) = run_point(&cfg, &prepared, cfg.reward.m_th, cfg.reward.gamma_comm).unwrap();
    let (head, tail) = curve.head_tail_means(0.1);
    assert!(tail >= head, "first 10% {head}, last 10% {tail}");
}

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use goee::nn::{self, Checkpoint, HaltingKind, TrainReport};
use goee_harness::config::ExperimentConfig;
use goee_harness::fig2::{self, FIG2_FILE, FLOPS_TOLERANCE};
use goee_harness::pipeline::{self, Prepared};
use goee_harness::{plot, report, sweep};

#[derive(Parser)]
#[command(name = "goee", version, about = "Goal-oriented early-exit offloading experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML). Built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for parallel stages.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the recursive early-exit network and save a checkpoint.
    TrainNet(Common),
    /// Compare halting rules on accuracy vs FLOPs.
    Fig2(Common),
    /// Train and evaluate one offloading policy.
    TrainPolicy {
        #[command(flatten)]
        common: Common,
        /// Reuse a recursive-network checkpoint instead of training.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Run the full (m_th, gamma_comm) grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Re-render plots from the CSVs in the output directory.
    Report(Common),
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn jobs(c: &Common) -> usize {
    c.jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn prepare(cfg: &ExperimentConfig, checkpoint: Option<&Path>) -> Result<Prepared> {
    let Some(path) = checkpoint else {
        return Ok(Prepared::new(cfg)?);
    };
    let net = match nn::load_checkpoint(path).with_context(|| format!("loading {}", path.display()))? {
        Checkpoint::Recursive(n) => n,
        Checkpoint::Baseline(_) => bail!("{} holds a baseline network", path.display()),
    };
    if net.config != cfg.backbone {
        bail!("checkpoint backbone does not match the config");
    }
    let data = pipeline::prepare_data(cfg);
    Ok(Prepared::with_network(cfg, net, TrainReport::default(), data)?)
}

fn train_net(c: &Common) -> Result<()> {
    let cfg = load_config(c)?;
    fs::create_dir_all(&c.out)?;
    let data = pipeline::prepare_data(&cfg);
    let (net, rep) = pipeline::train_network(&cfg, &data.train)?;
    let acc = pipeline::exit_accuracies(&net, &data.test)?;
    let ckpt = c.out.join("recursive.ckpt");
    nn::save_checkpoint(&ckpt, &Checkpoint::Recursive(net))?;
    write_json(
        &c.out.join("train_net.json"),
        &serde_json::json!({
            "fingerprint": cfg.fingerprint(),
            "epoch_losses": rep.epoch_losses,
            "exit_accuracy": acc,
        }),
    )?;
    println!("checkpoint: {}", ckpt.display());
    println!("final-exit test accuracy: {:.4}", acc.last().copied().unwrap_or(0.0));
    Ok(())
}

fn run_fig2(c: &Common) -> Result<()> {
    let cfg = load_config(c)?;
    fs::create_dir_all(&c.out)?;
    let data = pipeline::prepare_data(&cfg);
    let (rec, base) = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs(c).min(2))
        .build()?
        .install(|| {
            rayon::join(
                || pipeline::train_network(&cfg, &data.train),
                || pipeline::train_baseline_network(&cfg, &data.train),
            )
        });
    let (rec, base) = (rec?.0, base?.0);
    let fmt = |v: Vec<f64>| v.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>().join(" ");
    println!("recursive exit accuracy: {}", fmt(pipeline::exit_accuracies(&rec, &data.test)?));
    println!("baseline exit accuracy:  {}", fmt(pipeline::exit_accuracies(&base, &data.test)?));
    let points = fig2::run_fig2(&cfg, &rec, &base, &data.test)?;
    fig2::write_fig2(File::create(c.out.join(FIG2_FILE))?, &points)?;
    plot::fig2_plot(&c.out.join("fig2.svg"), &points)?;
    let d = fig2::dominance(
        &fig2::curve(&points, HaltingKind::RecursiveMargin),
        &fig2::curve(&points, HaltingKind::HighestProbability),
        FLOPS_TOLERANCE,
    );
    println!(
        "recursive margin >= highest probability at {}/{} matched points ({:.0}%)",
        d.dominated,
        d.matched,
        100.0 * d.fraction()
    );
    Ok(())
}

fn train_policy(c: &Common, checkpoint: Option<&Path>) -> Result<()> {
    let cfg = load_config(c)?;
    fs::create_dir_all(&c.out)?;
    let prepared = prepare(&cfg, checkpoint)?;
    let (table, row, curve) = sweep::run_point(&cfg, &prepared, cfg.reward.m_th, cfg.reward.gamma_comm)?;
    fs::write(c.out.join("qtable.txt"), table.to_text())?;
    let window = (curve.episode_rewards.len() / 100).max(1);
    let mut w = csv::Writer::from_path(c.out.join("learning_curve.csv"))?;
    w.write_record(["window", "first_episode", "mean_reward"])?;
    for (i, m) in curve.window_means(window).iter().enumerate() {
        w.write_record([i.to_string(), (i * window).to_string(), m.to_string()])?;
    }
    w.flush()?;
    write_json(&c.out.join("policy_summary.json"), &row)?;
    let s = &row.summary;
    println!(
        "comp saving {:.4}  comm saving {:.4}  goal effectiveness {:.4}  mean delay {:.3} ms",
        s.mean_comp_saving,
        s.mean_comm_saving,
        s.goal_effectiveness,
        s.mean_delay_s * 1e3
    );
    Ok(())
}

fn run_sweep(c: &Common, checkpoint: Option<&Path>) -> Result<()> {
    let cfg = load_config(c)?;
    let prepared = prepare(&cfg, checkpoint)?;
    let result = sweep::run_sweep(&cfg, &prepared, jobs(c))?;
    let (trade, hist) = (result.tradeoff_rows(), result.exit_hist_rows());
    report::emit_csvs(&c.out, &trade, &hist)?;
    write_json(&c.out.join("run.json"), &result)?;
    fs::write(c.out.join("config.toml"), cfg.to_toml())?;
    plot::sweep_plots(&c.out, &trade, &hist)?;
    println!("{} sweep points written to {}", trade.len(), c.out.display());
    Ok(())
}

fn run_report(c: &Common) -> Result<()> {
    let (trade, hist) = report::load_csvs(&c.out)
        .with_context(|| format!("reading sweep CSVs from {}", c.out.display()))?;
    if trade.is_empty() {
        bail!("{} has no rows", report::TRADEOFF_FILE);
    }
    let mut written = plot::sweep_plots(&c.out, &trade, &hist)?;
    let fig2_csv = c.out.join(FIG2_FILE);
    if fig2_csv.exists() {
        let points = fig2::read_fig2(File::open(&fig2_csv)?)?;
        let path = c.out.join("fig2.svg");
        plot::fig2_plot(&path, &points)?;
        written.push(path);
    }
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::TrainNet(c) => train_net(&c),
        Command::Fig2(c) => run_fig2(&c),
        Command::TrainPolicy { common, checkpoint } => train_policy(&common, checkpoint.as_deref()),
        Command::Sweep { common, checkpoint } => run_sweep(&common, checkpoint.as_deref()),
        Command::Report(c) => run_report(&c),
    }
}

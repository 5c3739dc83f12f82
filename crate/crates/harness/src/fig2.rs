//! Accuracy against mean FLOPs for the three halting rules. Margin halting
//! runs on the recursive network; the probability and patience rules run on
//! a conventionally trained early-exit network over the same data.

use std::io::{Read, Write};

use goee::nn::{evaluate_flops_accuracy, Dataset, ExitModel, HaltingKind, HaltingPolicy, TradeoffPoint};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::Result;

pub const FIG2_FILE: &str = "fig2.csv";

/// Matching window on mean FLOPs fraction.
pub const FLOPS_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Point {
    pub policy: HaltingKind,
    pub setting: f64,
    pub flops_fraction: f64,
    pub accuracy: f64,
    pub mean_exit: f64,
}

impl From<TradeoffPoint> for Fig2Point {
    fn from(p: TradeoffPoint) -> Self {
        Self {
            policy: p.policy.kind,
            setting: p.policy.setting(),
            flops_fraction: p.flops_fraction,
            accuracy: p.accuracy,
            mean_exit: p.mean_exit,
        }
    }
}

pub fn run_fig2<R, B>(cfg: &ExperimentConfig, recursive: &R, baseline: &B, test: &Dataset) -> Result<Vec<Fig2Point>>
where
    R: ExitModel + ?Sized,
    B: ExitModel + ?Sized,
{
    let f = &cfg.fig2;
    let margin: Vec<_> = f.margin_grid.iter().map(|&t| HaltingPolicy::recursive_margin(t)).collect();
    let mut others: Vec<_> = f
        .probability_grid
        .iter()
        .map(|&t| HaltingPolicy::highest_probability(t))
        .collect();
    others.extend(f.patience_grid.iter().map(|&p| HaltingPolicy::patience(p)));
    let mut points: Vec<Fig2Point> = evaluate_flops_accuracy(recursive, test, &margin)?
        .into_iter()
        .map(Into::into)
        .collect();
    points.extend(evaluate_flops_accuracy(baseline, test, &others)?.into_iter().map(Fig2Point::from));
    Ok(points)
}

pub fn curve(points: &[Fig2Point], kind: HaltingKind) -> Vec<Fig2Point> {
    points.iter().filter(|p| p.policy == kind).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    /// Reference points with at least one candidate within the FLOPs window.
    pub matched: usize,
    /// Matched points where some candidate in the window is at least as accurate.
    pub dominated: usize,
}

impl Dominance {
    pub fn fraction(&self) -> f64 {
        if self.matched == 0 {
            0.0
        } else {
            self.dominated as f64 / self.matched as f64
        }
    }
}

/// Compares `ours` against each point of `reference` at matched mean FLOPs.
pub fn dominance(ours: &[Fig2Point], reference: &[Fig2Point], tol: f64) -> Dominance {
    let mut d = Dominance { matched: 0, dominated: 0 };
    for r in reference {
        let best = ours
            .iter()
            .filter(|o| (o.flops_fraction - r.flops_fraction).abs() <= tol)
            .map(|o| o.accuracy)
            .fold(None, |acc: Option<f64>, a| Some(acc.map_or(a, |b| b.max(a))));
        if let Some(best) = best {
            d.matched += 1;
            if best >= r.accuracy {
                d.dominated += 1;
            }
        }
    }
    d
}

pub fn write_fig2<W: Write>(w: W, points: &[Fig2Point]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in points {
        out.serialize(p)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_fig2<R: Read>(r: R) -> Result<Vec<Fig2Point>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|r| r.map_err(Into::into))
        .collect()
}

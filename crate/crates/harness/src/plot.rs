//! SVG renderings of the CSV outputs.

use std::path::{Path, PathBuf};

use goee::nn::HaltingKind;
use plotters::prelude::*;

use crate::fig2::Fig2Point;
use crate::report::{ExitHistRow, TradeoffRow};
use crate::{HarnessError, Result};

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

fn color(i: usize) -> RGBColor {
    PALETTE[i % PALETTE.len()]
}

fn plot_err<E: std::fmt::Debug>(e: E) -> HarnessError {
    HarnessError::Plot(format!("{e:?}"))
}

fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Comm saving against comp saving, one curve per m_th, each point labelled
/// with its goal effectiveness.
pub fn tradeoff_plot(path: &Path, rows: &[TradeoffRow]) -> Result<()> {
    let root = SVGBackend::new(path, (800, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Communication vs computation saving", ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(0f64..1f64, 0f64..1.05f64)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("computation saving")
        .y_desc("communication saving")
        .draw()
        .map_err(plot_err)?;
    for (i, m) in distinct(rows.iter().map(|r| r.m_th)).into_iter().enumerate() {
        let mut curve: Vec<&TradeoffRow> = rows.iter().filter(|r| r.m_th == m).collect();
        curve.sort_by(|a, b| a.gamma_comm.total_cmp(&b.gamma_comm));
        let c = color(i);
        chart
            .draw_series(LineSeries::new(curve.iter().map(|r| (r.comp_saving, r.comm_saving)), c))
            .map_err(plot_err)?
            .label(format!("m_th = {m}"))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 15, y)], c));
        chart
            .draw_series(curve.iter().map(|r| Circle::new((r.comp_saving, r.comm_saving), 3, c.filled())))
            .map_err(plot_err)?;
        chart
            .draw_series(curve.iter().map(|r| {
                Text::new(
                    format!("{:.2}", r.goal_effectiveness),
                    (r.comp_saving + 0.005, r.comm_saving + 0.01),
                    ("sans-serif", 11).into_font().color(&c),
                )
            }))
            .map_err(plot_err)?;
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Grouped bars of exit frequencies for one m_th: local exits on top,
/// offloads below, one bar per gamma_comm within each exit group.
pub fn exit_hist_plot(path: &Path, hist: &[ExitHistRow], m_th: f64) -> Result<()> {
    let rows: Vec<&ExitHistRow> = hist.iter().filter(|h| h.m_th == m_th).collect();
    let gammas = distinct(rows.iter().map(|r| r.gamma_comm));
    let exits = rows.iter().map(|r| r.exit_index).max().map_or(0, |k| k + 1);
    let root = SVGBackend::new(path, (900, 700)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let panels = root.split_evenly((2, 1));
    for (panel, offloaded) in panels.iter().zip([false, true]) {
        let title = format!(
            "{} (m_th = {m_th})",
            if offloaded { "Offloaded after exit" } else { "Local result at exit" }
        );
        let mut chart = ChartBuilder::on(panel)
            .caption(title, ("sans-serif", 18))
            .margin(10)
            .x_label_area_size(35)
            .y_label_area_size(45)
            .build_cartesian_2d(-0.5f64..exits as f64 - 0.5, 0f64..1f64)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .disable_x_mesh()
            .x_labels(exits.max(1))
            .x_label_formatter(&|x| format!("{}", x.round() as i64))
            .x_desc("exit index")
            .y_desc("frequency")
            .draw()
            .map_err(plot_err)?;
        let width = 0.8 / gammas.len().max(1) as f64;
        for (gi, &g) in gammas.iter().enumerate() {
            let c = color(gi);
            let bars = rows
                .iter()
                .filter(|r| r.gamma_comm == g && r.offloaded == offloaded)
                .map(|r| {
                    let x0 = r.exit_index as f64 - 0.4 + gi as f64 * width;
                    Rectangle::new([(x0, 0.0), (x0 + width, r.frequency)], c.filled())
                });
            chart
                .draw_series(bars)
                .map_err(plot_err)?
                .label(format!("gamma_comm = {g}"))
                .legend(move |(x, y)| Rectangle::new([(x, y - 4), (x + 10, y + 4)], c.filled()));
        }
        chart
            .configure_series_labels()
            .border_style(BLACK)
            .background_style(WHITE)
            .draw()
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

pub fn fig2_plot(path: &Path, points: &[Fig2Point]) -> Result<()> {
    let lo = points.iter().map(|p| p.accuracy).fold(1.0f64, f64::min);
    let y0 = ((lo - 0.05).max(0.0) * 20.0).floor() / 20.0;
    let root = SVGBackend::new(path, (800, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Accuracy vs FLOPs", ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(0f64..1.02f64, y0..1f64)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("mean FLOPs fraction")
        .y_desc("accuracy")
        .draw()
        .map_err(plot_err)?;
    let kinds = [
        (HaltingKind::RecursiveMargin, "recursive margin"),
        (HaltingKind::HighestProbability, "highest probability"),
        (HaltingKind::Patience, "patience"),
    ];
    for (i, (kind, name)) in kinds.into_iter().enumerate() {
        let mut pts: Vec<(f64, f64)> = points
            .iter()
            .filter(|p| p.policy == kind)
            .map(|p| (p.flops_fraction, p.accuracy))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let c = color(i);
        chart
            .draw_series(LineSeries::new(pts.clone(), c))
            .map_err(plot_err)?
            .label(name)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 15, y)], c));
        chart
            .draw_series(pts.into_iter().map(|p| Circle::new(p, 3, c.filled())))
            .map_err(plot_err)?;
    }
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::LowerRight)
        .border_style(BLACK)
        .background_style(WHITE)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Renders the trade-off plot and one histogram figure per m_th into `dir`;
/// returns the written paths.
pub fn sweep_plots(dir: &Path, tradeoff: &[TradeoffRow], hist: &[ExitHistRow]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = vec![dir.join("tradeoff.svg")];
    tradeoff_plot(&written[0], tradeoff)?;
    for m in distinct(hist.iter().map(|h| h.m_th)) {
        let path = dir.join(format!("exit_hist_mth_{m}.svg"));
        exit_hist_plot(&path, hist, m)?;
        written.push(path);
    }
    Ok(written)
}

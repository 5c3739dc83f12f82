//! CSV contract of a sweep: `tradeoff.csv` and `exit_hist.csv`.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! gives the in-memory rows bit for bit.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Result;

pub const TRADEOFF_FILE: &str = "tradeoff.csv";
pub const EXIT_HIST_FILE: &str = "exit_hist.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub m_th: f64,
    pub gamma_comm: f64,
    pub gamma_comp: f64,
    pub comp_saving: f64,
    pub comm_saving: f64,
    pub goal_effectiveness: f64,
    pub mean_delay_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitHistRow {
    pub m_th: f64,
    pub gamma_comm: f64,
    pub exit_index: usize,
    pub offloaded: bool,
    pub frequency: f64,
}

fn write_rows<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(r: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|r| r.map_err(Into::into))
        .collect()
}

pub fn write_tradeoff<W: Write>(w: W, rows: &[TradeoffRow]) -> Result<()> {
    write_rows(w, rows)
}

pub fn read_tradeoff<R: Read>(r: R) -> Result<Vec<TradeoffRow>> {
    read_rows(r)
}

pub fn write_exit_hist<W: Write>(w: W, rows: &[ExitHistRow]) -> Result<()> {
    write_rows(w, rows)
}

pub fn read_exit_hist<R: Read>(r: R) -> Result<Vec<ExitHistRow>> {
    read_rows(r)
}

/// Writes both CSVs into `dir`, creating it if needed.
pub fn emit_csvs(dir: &Path, tradeoff: &[TradeoffRow], hist: &[ExitHistRow]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_tradeoff(File::create(dir.join(TRADEOFF_FILE))?, tradeoff)?;
    write_exit_hist(File::create(dir.join(EXIT_HIST_FILE))?, hist)?;
    Ok(())
}

pub fn load_csvs(dir: &Path) -> Result<(Vec<TradeoffRow>, Vec<ExitHistRow>)> {
    Ok((
        read_tradeoff(File::open(dir.join(TRADEOFF_FILE))?)?,
        read_exit_hist(File::open(dir.join(EXIT_HIST_FILE))?)?,
    ))
}

/// Histogram rows of one sweep point.
pub fn hist_for(hist: &[ExitHistRow], m_th: f64, gamma_comm: f64) -> impl Iterator<Item = &ExitHistRow> {
    hist.iter()
        .filter(move |h| h.m_th == m_th && h.gamma_comm == gamma_comm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_contract() {
        let mut buf = Vec::new();
        let row = TradeoffRow {
            m_th: 0.1,
            gamma_comm: 1.5,
            gamma_comp: 1.0,
            comp_saving: 0.25,
            comm_saving: 0.5,
            goal_effectiveness: 0.75,
            mean_delay_ms: 12.5,
        };
        write_tradeoff(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "m_th,gamma_comm,gamma_comp,comp_saving,comm_saving,goal_effectiveness,mean_delay_ms\n\
             0.1,1.5,1.0,0.25,0.5,0.75,12.5\n"
        );
        let mut buf = Vec::new();
        let row = ExitHistRow { m_th: 0.2, gamma_comm: 3.0, exit_index: 2, offloaded: true, frequency: 0.125 };
        write_exit_hist(&mut buf, &[row]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "m_th,gamma_comm,exit_index,offloaded,frequency\n0.2,3.0,2,true,0.125\n"
        );
    }

    #[test]
    fn awkward_floats_round_trip() {
        let rows: Vec<TradeoffRow> = [0.1 + 0.2, 1.0 / 3.0, 5e-324, 123456.789e10]
            .iter()
            .map(|&v| TradeoffRow {
                m_th: v,
                gamma_comm: v,
                gamma_comp: v,
                comp_saving: v,
                comm_saving: v,
                goal_effectiveness: v,
                mean_delay_ms: v,
            })
            .collect();
        let mut buf = Vec::new();
        write_tradeoff(&mut buf, &rows).unwrap();
        assert_eq!(read_tradeoff(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn malformed_csv_is_an_error() {
        assert!(read_exit_hist("m_th,gamma_comm,exit_index,offloaded,frequency\n0.1,1,x,true,0.5\n".as_bytes()).is_err());
    }
}

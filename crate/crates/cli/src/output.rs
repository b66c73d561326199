//! CSV rows and file emission. Floats are written in shortest round-trip form,
//! so every numeric field parses back to the identical value.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use orbitshare::sweep::{PairClassification, RateSweep, ThroughputPoint};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRateRow {
    pub scenario: String,
    pub service: String,
    pub rate: f64,
    pub tau: Option<usize>,
    pub load_configured: f64,
    pub load_actual: f64,
    pub u_leo: usize,
    pub u_geo: usize,
    pub ps: f64,
    pub ci: f64,
    pub throughput: f64,
    pub de_approx: Option<f64>,
    pub is_peak: bool,
}

impl SweepRateRow {
    pub fn new(p: &ThroughputPoint, de_approx: Option<f64>) -> Self {
        Self {
            scenario: p.band.to_string(),
            service: p.service.to_string(),
            rate: p.rate,
            tau: p.tau,
            load_configured: p.load_configured,
            load_actual: p.load_actual,
            u_leo: p.u_leo,
            u_geo: p.u_geo,
            ps: p.p_s,
            ci: p.ci_half_width,
            throughput: p.throughput,
            de_approx,
            is_peak: p.is_peak,
        }
    }
}

/// Rows of rate sweeps: by sweep, then rate, then load.
pub fn rate_sweep_rows(sweeps: &[RateSweep]) -> Vec<SweepRateRow> {
    sweeps
        .iter()
        .flat_map(|s| {
            s.entries.iter().flat_map(|e| {
                e.sweep.points.iter().map(|p| SweepRateRow::new(p, Some(e.de.approx_max_throughput)))
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPairsRow {
    pub alpha: usize,
    pub beta: f64,
    pub rate_leo: f64,
    pub rate_geo: f64,
    pub s_leo: f64,
    pub s_geo: f64,
    pub bench_leo: f64,
    pub bench_geo: f64,
    pub quadrant: String,
}

impl From<&PairClassification> for SweepPairsRow {
    fn from(p: &PairClassification) -> Self {
        Self {
            alpha: p.alpha,
            beta: p.beta,
            rate_leo: p.rates.leo,
            rate_geo: p.rates.geo,
            s_leo: p.throughput.leo,
            s_geo: p.throughput.geo,
            bench_leo: p.benchmark.leo,
            bench_geo: p.benchmark.geo,
            quadrant: p.quadrant.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkBudgetRow {
    pub receiver: String,
    pub rx_power_dbw: f64,
    pub noise_power_dbw: f64,
    pub snr_computed_db: f64,
    pub snr_db: f64,
    pub snr_linear: f64,
    pub overridden: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeThresholdRow {
    pub tau: usize,
    pub threshold_g: f64,
    pub service: Option<String>,
    pub snr_db: Option<f64>,
    pub rate: Option<f64>,
    pub approx_max_throughput: Option<f64>,
}

pub fn csv_bytes<R: Serialize>(rows: &[R]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)
}

/// Writes `<stem>.csv`, creating the directory if needed.
///
/// A header-only file is written for an empty row set, so consumers always
/// find the schema.
pub fn write_csv<R: Serialize>(dir: &Path, stem: &str, rows: &[R], header: &[&str]) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(format!("{stem}.csv"));
    let bytes = if rows.is_empty() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?
    } else {
        csv_bytes(rows)?
    };
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn write_json<S: Serialize>(dir: &Path, stem: &str, summary: &S) -> Result<(PathBuf, String)> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(format!("{stem}.json"));
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
    Ok((path, text))
}

pub const SWEEP_RATE_HEADER: &[&str] = &[
    "scenario", "service", "rate", "tau", "load_configured", "load_actual", "u_leo", "u_geo", "ps", "ci",
    "throughput", "de_approx", "is_peak",
];

pub const SWEEP_PAIRS_HEADER: &[&str] =
    &["alpha", "beta", "rate_leo", "rate_geo", "s_leo", "s_geo", "bench_leo", "bench_geo", "quadrant"];

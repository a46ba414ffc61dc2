//! CSV tables and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use spinchain_core::experiments::SweepTable;
use spinchain_core::{OctResult, Pulse, Trajectory};

use crate::config::{Resolved, RunConfig};
use crate::error::CliError;

/// Root for runs without an explicit output directory.
pub const OUTPUT_ENV: &str = "SPINCHAIN_OUTPUT_DIR";

pub fn output_dir(resolved: &Resolved) -> PathBuf {
    if let Some(dir) = &resolved.config.output {
        return dir.clone();
    }
    let root = std::env::var_os(OUTPUT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    root.join(format!("{}-{}", resolved.experiment.name(), &resolved.hash()[..12]))
}

pub fn write_table(path: &Path, table: &SweepTable) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(table.header())?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&v| format_value(v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip form; scientific notation for tiny magnitudes.
pub fn format_value(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

pub fn pulses_table(left: &Pulse, right: &Pulse) -> SweepTable {
    SweepTable {
        axis: "t".into(),
        columns: vec!["F".into(), "G".into()],
        rows: left
            .grid()
            .times()
            .zip(left.values().iter().zip(right.values()))
            .map(|(t, (f, g))| vec![t, *f, *g])
            .collect(),
        master_seed: None,
    }
}

pub fn trajectory_table(traj: &Trajectory) -> SweepTable {
    SweepTable {
        axis: "t".into(),
        columns: vec!["P_target".into(), "norm_error".into()],
        rows: traj
            .grid()
            .times()
            .zip(traj.target_populations().into_iter().zip(traj.norm_errors()))
            .map(|(t, (p, e))| vec![t, p, e])
            .collect(),
        master_seed: None,
    }
}

pub fn convergence_table(result: &OctResult) -> SweepTable {
    SweepTable {
        axis: "iteration".into(),
        columns: vec!["J1".into(), "J2".into(), "J".into()],
        rows: result
            .j_history
            .iter()
            .enumerate()
            .map(|(i, j)| vec![i as f64, j.j1, j.j2, j.total])
            .collect(),
        master_seed: None,
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: &'static str,
    pub config: &'a RunConfig,
    pub config_hash: String,
    pub master_seed: u64,
    pub resolved: ResolvedSummary,
    pub results: serde_json::Value,
    pub files: Vec<String>,
    pub threads: usize,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct ResolvedSummary {
    pub alpha: f64,
    pub t: f64,
    pub peak_window: f64,
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(manifest)?;
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}

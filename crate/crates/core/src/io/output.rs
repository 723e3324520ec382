use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::{fd_gain, find_crossover, BenchmarkReport, SweepResult};
use crate::interference::MeanInterferenceBreakdown;

pub const SWEEP_COLUMNS: [&str; 8] =
    ["eta_dB", "ec_hd_exact", "ec_hd_se", "ec_fd_exact", "ec_fd_se", "ec_hd_lb", "ec_fd_lb", "ec_fd_lb_se"];

/// Ten significant digits, scientific notation.
pub fn format_value(v: f64) -> String {
    format!("{v:.9e}")
}

/// `results.csv` -> `results.csv.meta.json`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Reproducibility record written next to every sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub topology_hash: String,
    pub topology_seed: Option<u64>,
    pub trial_seed: u64,
    pub exact_trials: u64,
    pub lower_bound_trials: u64,
    pub theta: f64,
    pub kappa: f64,
    pub cells: usize,
    pub fd_gain: f64,
    pub crossover_eta_db: Option<f64>,
}

pub fn emit_sweep(sweep: &SweepResult, path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SWEEP_COLUMNS)?;
    for row in &sweep.rows {
        w.write_record(
            [
                row.eta_db,
                row.hd_exact.ec,
                row.hd_exact.std_error,
                row.fd_exact.ec,
                row.fd_exact.std_error,
                row.hd_lb.ec,
                row.fd_lb.ec,
                row.fd_lb.std_error,
            ]
            .map(format_value),
        )?;
    }
    w.flush()?;

    let f = &sweep.fingerprint;
    let meta = SweepMetadata {
        topology_hash: f.topology_hash.clone(),
        topology_seed: f.topology_seed,
        trial_seed: f.seed,
        exact_trials: f.exact_trials,
        lower_bound_trials: f.lower_bound_trials,
        theta: f.theta,
        kappa: f.kappa,
        cells: f.cells,
        fd_gain: fd_gain(sweep),
        crossover_eta_db: find_crossover(sweep),
    };
    let sidecar = sidecar_path(path);
    std::fs::write(&sidecar, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(sidecar)
}

pub fn emit_breakdown(breakdown: &MeanInterferenceBreakdown, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["interferer_id", "type", "mean_watts"])?;
    for (kind, list) in [("bs", &breakdown.per_bs), ("ue", &breakdown.per_ue)] {
        for (id, watts) in list {
            w.write_record([id.to_string(), kind.to_string(), format_value(*watts)])?;
        }
    }
    w.write_record(["total".to_string(), "all".to_string(), format_value(breakdown.total)])?;
    w.flush()?;
    Ok(())
}

pub fn emit_benchmark(report: &BenchmarkReport, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["exact_seconds", "lb_seconds", "speedup", "M"])?;
    w.write_record([
        format_value(report.exact_seconds),
        format_value(report.lb_seconds),
        format_value(report.speedup()),
        report.cells.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(format_value(1.0 / 3.0), "3.333333333e-1");
        assert_eq!(format_value(-50.0), "-5.000000000e1");
        assert_eq!(format_value(0.0), "0.000000000e0");
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/sweep.csv")), PathBuf::from("out/sweep.csv.meta.json"));
    }
}

//! Delimited-text emission: comma separated, header row, '.' decimal
//! separator, LF line endings. Floats print in Rust's shortest
//! round-trip form so outputs are a bit-exact contract.

use loopda_core::error::Result;
use loopda_core::experiments::{
    ClimatologyStats, DensitySweepRow, InflationSweepRow, RunResult, WindowSweepRow,
};
use std::path::Path;

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// One row per window: index, time, scores, increment norm.
pub fn run_result_table(run: &RunResult) -> String {
    let mut out = String::from("window,time,forecast_rmse,analysis_rmse,increment_norm\n");
    for i in 0..run.window_times.len() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            run.window_times[i],
            run.forecast_rmse[i],
            run.analysis_rmse[i],
            run.increment_norms[i]
        ));
    }
    out
}

/// Summary block appended to run output directories.
pub fn run_summary_table(run: &RunResult) -> String {
    let mut out = String::from("metric,value\n");
    out.push_str(&format!("summary_forecast_rmse,{}\n", run.summary_forecast_rmse));
    out.push_str(&format!("summary_analysis_rmse,{}\n", run.summary_analysis_rmse));
    out.push_str(&format!("scored_windows,{}\n", run.scored_windows()));
    out.push_str(&format!("degenerate_windows,{}\n", run.degenerate_windows));
    out.push_str(&format!("windows_without_observations,{}\n", run.windows_without_observations));
    out
}

pub fn climatology_table(stats: &ClimatologyStats) -> String {
    let mut out = String::from("variable,mean,variance\n");
    for v in 0..stats.mean.len() {
        out.push_str(&format!("{},{},{}\n", v, stats.mean[v], stats.variance[v]));
    }
    out
}

pub fn window_sweep_table(rows: &[WindowSweepRow], time_scale_seconds: f64) -> String {
    let mut out = String::from("window_model_units,window_seconds,filter,mean_rmse,n_seeds\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.window,
            r.window * time_scale_seconds,
            r.filter,
            r.mean_rmse,
            r.per_seed_rmse.len()
        ));
    }
    out
}

pub fn inflation_sweep_table(rows: &[InflationSweepRow]) -> String {
    let mut out = String::from("delta,mu,mean_rmse,n_seeds\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.delta, r.mu, r.mean_rmse, r.per_seed_rmse.len()));
    }
    out
}

pub fn density_sweep_table(rows: &[DensitySweepRow]) -> String {
    let mut out = String::from("n_observed,mean_rmse,n_seeds\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.n_observed, r.mean_rmse, r.per_seed_rmse.len()));
    }
    out
}

/// Per-cell file used for sweep resume: one row per seed.
pub fn cell_table(fingerprint: u64, label: &str, seeds: &[u64], rmse: &[f64]) -> String {
    let mut out = format!("# cell fingerprint {fingerprint:016x} label {label}\n");
    out.push_str("seed,rmse\n");
    for (s, r) in seeds.iter().zip(rmse) {
        out.push_str(&format!("{s},{r}\n"));
    }
    out
}

/// Parse a cell file back, verifying the fingerprint and label.
pub fn parse_cell_table(text: &str, fingerprint: u64, label: &str, seeds: &[u64]) -> Option<Vec<f64>> {
    let mut lines = text.lines();
    let header = lines.next()?;
    let expected = format!("# cell fingerprint {fingerprint:016x} label {label}");
    if header != expected {
        return None;
    }
    if lines.next()? != "seed,rmse" {
        return None;
    }
    let mut values = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let row = lines.next()?;
        let (s, r) = row.split_once(',')?;
        if s.parse::<u64>().ok()? != seed {
            return None;
        }
        values.push(r.parse::<f64>().ok()?);
    }
    if lines.next().is_some() {
        return None;
    }
    Some(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_table_round_trip() {
        let seeds = [3u64, 4, 5];
        let rmse = [0.25, 0.5000000000000001, 1.0 / 3.0];
        let text = cell_table(0xabcd, "w0.25_etkf", &seeds, &rmse);
        let parsed = parse_cell_table(&text, 0xabcd, "w0.25_etkf", &seeds).unwrap();
        assert_eq!(parsed, rmse);
        // Wrong fingerprint or label is rejected.
        assert!(parse_cell_table(&text, 0xabce, "w0.25_etkf", &seeds).is_none());
        assert!(parse_cell_table(&text, 0xabcd, "other", &seeds).is_none());
    }
}

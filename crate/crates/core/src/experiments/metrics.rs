//! Skill metrics, climatology, and the usefulness threshold.

use super::runner::RunResult;
use crate::error::{Error, Result};
use crate::models::{integrate, IntegratorConfig, Model, State};

/// Root-mean-square difference of two equal-length series.
pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::invalid(format!(
            "rmse needs equal nonempty series, got lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / a.len() as f64).sqrt())
}

/// Long-run per-variable statistics of a free model run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClimatologyStats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Model time units actually scored (after spin-up).
    pub duration: f64,
}

impl ClimatologyStats {
    pub fn sd(&self, variable: usize) -> f64 {
        self.variance[variable].sqrt()
    }
}

/// Free-run mean and variance per variable over `duration` model units,
/// after discarding `spin_up` units.
pub fn climatology(
    model: &Model,
    initial: &State,
    config: &IntegratorConfig,
    spin_up: f64,
    duration: f64,
) -> Result<ClimatologyStats> {
    let warm = integrate(model, initial, config, spin_up)?;
    let traj = integrate(model, warm.last(), config, duration)?;
    let n = model.dim();
    let count = traj.states.len() as f64;
    let mut mean = vec![0.0; n];
    for s in &traj.states {
        for v in 0..n {
            mean[v] += s[v];
        }
    }
    for m in mean.iter_mut() {
        *m /= count;
    }
    let mut variance = vec![0.0; n];
    for s in &traj.states {
        for v in 0..n {
            let d = s[v] - mean[v];
            variance[v] += d * d;
        }
    }
    for v in variance.iter_mut() {
        *v /= count - 1.0;
    }
    Ok(ClimatologyStats { mean, variance, duration })
}

/// A forecast is useless when its RMSE exceeds 70% of the climatological
/// standard deviation of the scored variable.
pub fn forecast_useless(rmse_value: f64, clim: &ClimatologyStats, variable: usize) -> Result<bool> {
    if variable >= clim.variance.len() {
        return Err(Error::invalid(format!("variable {variable} out of range")));
    }
    let var = clim.variance[variable];
    if !(var > 0.0) {
        return Err(Error::invalid("climatological variance must be positive"));
    }
    Ok(rmse_value > 0.7 * var.sqrt())
}

/// Histogram and shape statistics of member-minus-analysis differences.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub n_samples: usize,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Summarize the ensemble spread recorded during a run.
pub fn ensemble_spread_diagnostics(run: &RunResult) -> Result<SpreadHistogram> {
    let samples = &run.spread_samples;
    if samples.is_empty() {
        return Err(Error::invalid(
            "run holds no spread samples; enable spread recording on an ensemble filter",
        ));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &s in samples {
        let d = s - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let sd = m2.sqrt();
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };

    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let n_bins = 41;
    let width = if hi > lo { (hi - lo) / n_bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; n_bins];
    for &s in samples {
        let mut b = ((s - lo) / width) as usize;
        if b >= n_bins {
            b = n_bins - 1;
        }
        counts[b] += 1;
    }
    let bin_edges = (0..=n_bins).map(|i| lo + i as f64 * width).collect();
    Ok(SpreadHistogram {
        bin_edges,
        counts,
        n_samples: samples.len(),
        mean,
        sd,
        skewness,
        excess_kurtosis,
    })
}

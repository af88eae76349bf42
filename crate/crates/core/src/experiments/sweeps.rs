//! Sweep protocols over window length, inflation parameters, and
//! observation density.
//!
//! Every cell of a sweep is one seeded `run_twin_experiment`; cells share
//! the seed list so comparisons are paired, and each cell rerun standalone
//! reproduces its swept value bitwise. Cells execute in parallel and are
//! gathered in deterministic order.

use super::runner::{run_twin_experiment, FilterConfig, RunResult, TwinExperimentConfig};
use crate::error::Result;
use crate::observations::{place_sensors, ObservationOperatorSpec, SensorNetwork};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSweepRow {
    pub window: f64,
    pub filter: String,
    /// Per-seed summary forecast RMSE, in seed order.
    pub per_seed_rmse: Vec<f64>,
    pub mean_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InflationSweepRow {
    pub delta: f64,
    pub mu: f64,
    pub per_seed_rmse: Vec<f64>,
    pub mean_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySweepRow {
    pub n_observed: usize,
    pub per_seed_rmse: Vec<f64>,
    pub mean_rmse: f64,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn run_cell(configs: Vec<TwinExperimentConfig>) -> Result<Vec<RunResult>> {
    configs.into_par_iter().map(|c| run_twin_experiment(&c)).collect()
}

/// One run per (filter, window, seed) with truth shared across filters at a
/// fixed (window, seed), so filter comparisons are paired.
pub fn window_sweep(
    base: &TwinExperimentConfig,
    filters: &[FilterConfig],
    windows: &[f64],
    seeds: &[u64],
) -> Result<Vec<WindowSweepRow>> {
    let mut rows = Vec::with_capacity(filters.len() * windows.len());
    let mut configs = Vec::new();
    for &window in windows {
        for filter in filters {
            for &seed in seeds {
                let mut c = base.clone();
                c.window = window;
                c.filter = filter.clone();
                c.seed = seed;
                configs.push(c);
            }
        }
    }
    let results = run_cell(configs)?;
    let mut idx = 0;
    for &window in windows {
        for filter in filters {
            let per_seed: Vec<f64> = results[idx..idx + seeds.len()]
                .iter()
                .map(|r| r.summary_forecast_rmse)
                .collect();
            idx += seeds.len();
            rows.push(WindowSweepRow {
                window,
                filter: filter.kind.name().to_string(),
                mean_rmse: mean(&per_seed),
                per_seed_rmse: per_seed,
            });
        }
    }
    Ok(rows)
}

/// RMSE(delta, mu) over a grid, averaged over seeds.
pub fn inflation_sweep(
    base: &TwinExperimentConfig,
    deltas: &[f64],
    mus: &[f64],
    seeds: &[u64],
) -> Result<Vec<InflationSweepRow>> {
    let mut configs = Vec::new();
    for &delta in deltas {
        for &mu in mus {
            for &seed in seeds {
                let mut c = base.clone();
                c.filter.inflation.delta = delta;
                c.filter.inflation.mu = mu;
                c.seed = seed;
                configs.push(c);
            }
        }
    }
    let results = run_cell(configs)?;
    let mut rows = Vec::with_capacity(deltas.len() * mus.len());
    let mut idx = 0;
    for &delta in deltas {
        for &mu in mus {
            let per_seed: Vec<f64> = results[idx..idx + seeds.len()]
                .iter()
                .map(|r| r.summary_forecast_rmse)
                .collect();
            idx += seeds.len();
            rows.push(InflationSweepRow { delta, mu, mean_rmse: mean(&per_seed), per_seed_rmse: per_seed });
        }
    }
    Ok(rows)
}

/// How many sensors a run observes. For bare 3-variable models a count c
/// observes the first c state variables; with a geometry, sensors come from
/// `place_sensors` on the given network template.
pub fn observation_density_sweep(
    base: &TwinExperimentConfig,
    sensor_counts: &[usize],
    network_template: Option<&SensorNetwork>,
    seeds: &[u64],
) -> Result<Vec<DensitySweepRow>> {
    let mut configs = Vec::new();
    for &count in sensor_counts {
        for &seed in seeds {
            let mut c = base.clone();
            c.seed = seed;
            c.obs.operator = match (&base.geometry, network_template) {
                (Some(geom), Some(template)) if count > 0 => {
                    let mut network = *template;
                    network.n_sensors = count;
                    place_sensors(geom, &network)?
                }
                _ => ObservationOperatorSpec::SelectIndices((0..count).collect()),
            };
            configs.push(c);
        }
    }
    let results = run_cell(configs)?;
    let mut rows = Vec::with_capacity(sensor_counts.len());
    let mut idx = 0;
    for &count in sensor_counts {
        let per_seed: Vec<f64> = results[idx..idx + seeds.len()]
            .iter()
            .map(|r| r.summary_forecast_rmse)
            .collect();
        idx += seeds.len();
        rows.push(DensitySweepRow { n_observed: count, mean_rmse: mean(&per_seed), per_seed_rmse: per_seed });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assimilation::InflationConfig;
    use crate::experiments::runner::FilterKind;
    use crate::models::{Lorenz63Params, Model};

    fn base() -> TwinExperimentConfig {
        let mut filter = FilterConfig::new(FilterKind::Etkf);
        filter.inflation = InflationConfig { delta: 0.05, mu: 0.0 };
        let mut c = TwinExperimentConfig::new(Model::Lorenz63(Lorenz63Params::default()), filter);
        c.n_windows = 30;
        c.spin_up_windows = 10;
        c
    }

    #[test]
    fn single_cell_sweep_matches_standalone_run() {
        let base = base();
        let rows = window_sweep(&base, &[base.filter.clone()], &[0.25], &[5]).unwrap();
        assert_eq!(rows.len(), 1);
        let mut standalone = base.clone();
        standalone.seed = 5;
        standalone.window = 0.25;
        let run = run_twin_experiment(&standalone).unwrap();
        assert_eq!(rows[0].per_seed_rmse[0], run.summary_forecast_rmse);
        assert_eq!(rows[0].mean_rmse, run.summary_forecast_rmse);
    }

    #[test]
    fn inflation_grid_has_one_row_per_cell() {
        let rows = inflation_sweep(&base(), &[0.0, 0.1], &[0.0, 0.2], &[1, 2]).unwrap();
        assert_eq!(rows.len(), 4);
        for row in &rows {
            assert_eq!(row.per_seed_rmse.len(), 2);
        }
    }

    #[test]
    fn density_extremes_are_ordered() {
        // Observing all three variables beats observing only x1 on average.
        let rows = observation_density_sweep(&base(), &[1, 3], None, &[1, 2, 3]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(
            rows[1].mean_rmse <= rows[0].mean_rmse,
            "full observation {} should beat partial {}",
            rows[1].mean_rmse,
            rows[0].mean_rmse
        );
    }
}

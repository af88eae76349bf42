//! Twin experiments: truth generation, cycling, skill metrics, and the
//! sweep protocols (window length, inflation grid, observation density).

mod metrics;
mod runner;
mod sweeps;

pub use metrics::{
    climatology, ensemble_spread_diagnostics, forecast_useless, rmse, ClimatologyStats, SpreadHistogram,
};
pub use runner::{run_twin_experiment, FilterConfig, FilterKind, ObsConfig, RunResult, TwinExperimentConfig};
pub use sweeps::{
    inflation_sweep, observation_density_sweep, window_sweep, DensitySweepRow, InflationSweepRow,
    WindowSweepRow,
};

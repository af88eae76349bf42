//! Subcommand implementations shared by the binary and the tests.

use crate::config::{Overrides, ResolvedConfig};
use crate::manifest::Manifest;
use crate::output;
use loopda_core::error::{Error, Result};
use loopda_core::experiments::{
    climatology, inflation_sweep, observation_density_sweep, run_twin_experiment, window_sweep,
};
use loopda_core::models::State;
use loopda_core::rng::{stream, Domain};
use loopda_core::verify::run_suite;
use rand::Rng;
use std::path::{Path, PathBuf};

fn load(config_path: &Path, overrides: &Overrides) -> Result<ResolvedConfig> {
    if !config_path.exists() {
        return Err(Error::invalid(format!("config file not found: {}", config_path.display())));
    }
    ResolvedConfig::from_file(config_path, overrides)
}

/// Run one twin experiment; writes result.csv, summary.csv, and the
/// manifest into `out_dir`.
pub fn cmd_run(config_path: &Path, overrides: &Overrides, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let config = load(config_path, overrides)?;
    let twin = config.twin_experiment()?;
    let mut manifest = Manifest::begin("run");

    let run = run_twin_experiment(&twin)?;

    std::fs::create_dir_all(out_dir)?;
    let result_path = out_dir.join("result.csv");
    output::write_text(&result_path, &output::run_result_table(&run))?;
    let summary_path = out_dir.join("summary.csv");
    output::write_text(&summary_path, &output::run_summary_table(&run))?;
    manifest.add_output("result", &result_path);
    manifest.add_output("summary", &summary_path);
    let manifest_path = manifest.write(&config, out_dir)?;
    Ok(vec![result_path, summary_path, manifest_path])
}

/// Long-run climatology of the configured model.
pub fn cmd_climatology(config_path: &Path, overrides: &Overrides, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let config = load(config_path, overrides)?;
    let model = config.model()?;
    let integrator = config.integrator()?;
    let spin_up: f64 = config
        .get("climatology.spin_up")
        .parse()
        .map_err(|_| Error::invalid("climatology.spin_up: expected a number"))?;
    let duration: f64 = config
        .get("climatology.duration")
        .parse()
        .map_err(|_| Error::invalid("climatology.duration: expected a number"))?;
    let seed: u64 = config.get("seed").parse().map_err(|_| Error::invalid("seed: expected an integer"))?;
    let mut manifest = Manifest::begin("climatology");

    let mut rng = stream(seed, Domain::Generic(200));
    let ic = State::from_fn(model.dim(), |_, _| rng.gen_range(-10.0..10.0));
    let stats = climatology(&model, &ic, &integrator, spin_up, duration)?;

    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join("climatology.csv");
    output::write_text(&path, &output::climatology_table(&stats))?;
    manifest.add_output("climatology", &path);
    let manifest_path = manifest.write(&config, out_dir)?;
    Ok(vec![path, manifest_path])
}

/// One sweep cell: parameters plus the per-seed scores.
struct Cell {
    columns: Vec<String>,
    per_seed: Vec<f64>,
}

/// Run the configured sweep, resuming from any completed cell files in
/// `out_dir/cells/`.
pub fn cmd_sweep(config_path: &Path, overrides: &Overrides, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let config = load(config_path, overrides)?;
    let base = config.twin_experiment()?;
    let seeds = config.sweep_seeds()?;
    if seeds.is_empty() {
        return Err(Error::invalid("sweep needs at least one seed"));
    }
    let fingerprint = config.fingerprint();
    let kind = config.get("sweep.kind").to_string();
    let mut manifest = Manifest::begin("sweep");

    std::fs::create_dir_all(out_dir.join("cells"))?;

    // Enumerate cells: label plus the closure that computes its per-seed
    // scores. Cells run one at a time; seeds within a cell in parallel.
    let mut cells: Vec<Cell> = Vec::new();
    match kind.as_str() {
        "windows" => {
            let windows = config.sweep_windows()?;
            let filters = config.sweep_filters()?;
            for &window in &windows {
                for filter in &filters {
                    let label = format!("w{}_{}", window, filter.kind.name());
                    let cell_path = cell_path(out_dir, cells.len());
                    let per_seed = match try_load_cell(&cell_path, fingerprint, &label, &seeds) {
                        Some(values) => values,
                        None => {
                            let rows = window_sweep(&base, std::slice::from_ref(filter), &[window], &seeds)?;
                            let values = rows.into_iter().next().expect("one cell").per_seed_rmse;
                            output::write_text(&cell_path, &output::cell_table(fingerprint, &label, &seeds, &values))?;
                            values
                        }
                    };
                    cells.push(Cell {
                        // label recorded in the cell file only
                        columns: vec![
                            window.to_string(),
                            (window * base.integrator.time_scale_seconds).to_string(),
                            filter.kind.name().to_string(),
                        ],
                        per_seed,
                    });
                }
            }
            let table = assemble_table(
                "window_model_units,window_seconds,filter,mean_rmse,n_seeds",
                &cells,
            );
            let path = out_dir.join("sweep.csv");
            output::write_text(&path, &table)?;
            manifest.add_output("sweep", &path);
        }
        "inflation" => {
            let deltas = config.sweep_deltas()?;
            let mus = config.sweep_mus()?;
            for &delta in &deltas {
                for &mu in &mus {
                    let label = format!("d{delta}_m{mu}");
                    let cell_path = cell_path(out_dir, cells.len());
                    let per_seed = match try_load_cell(&cell_path, fingerprint, &label, &seeds) {
                        Some(values) => values,
                        None => {
                            let rows = inflation_sweep(&base, &[delta], &[mu], &seeds)?;
                            let values = rows.into_iter().next().expect("one cell").per_seed_rmse;
                            output::write_text(&cell_path, &output::cell_table(fingerprint, &label, &seeds, &values))?;
                            values
                        }
                    };
                    cells.push(Cell {
                        // label recorded in the cell file only
                        columns: vec![delta.to_string(), mu.to_string()],
                        per_seed,
                    });
                }
            }
            let table = assemble_table("delta,mu,mean_rmse,n_seeds", &cells);
            let path = out_dir.join("sweep.csv");
            output::write_text(&path, &table)?;
            manifest.add_output("sweep", &path);
        }
        "density" => {
            let counts = config.sweep_counts()?;
            for &count in &counts {
                let label = format!("n{count}");
                let cell_path = cell_path(out_dir, cells.len());
                let per_seed = match try_load_cell(&cell_path, fingerprint, &label, &seeds) {
                    Some(values) => values,
                    None => {
                        let rows = observation_density_sweep(&base, &[count], None, &seeds)?;
                        let values = rows.into_iter().next().expect("one cell").per_seed_rmse;
                        output::write_text(&cell_path, &output::cell_table(fingerprint, &label, &seeds, &values))?;
                        values
                    }
                };
                cells.push(Cell { columns: vec![count.to_string()], per_seed });
            }
            let table = assemble_table("n_observed,mean_rmse,n_seeds", &cells);
            let path = out_dir.join("sweep.csv");
            output::write_text(&path, &table)?;
            manifest.add_output("sweep", &path);
        }
        other => return Err(Error::invalid(format!("unknown sweep.kind '{other}'"))),
    }

    let sweep_path = out_dir.join("sweep.csv");
    let manifest_path = manifest.write(&config, out_dir)?;
    let _ = cells;
    Ok(vec![sweep_path, manifest_path])
}

fn cell_path(out_dir: &Path, index: usize) -> PathBuf {
    out_dir.join("cells").join(format!("cell_{index:04}.csv"))
}

fn try_load_cell(path: &Path, fingerprint: u64, label: &str, seeds: &[u64]) -> Option<Vec<f64>> {
    let text = std::fs::read_to_string(path).ok()?;
    output::parse_cell_table(&text, fingerprint, label, seeds)
}

fn assemble_table(header: &str, cells: &[Cell]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for cell in cells {
        let mean = cell.per_seed.iter().sum::<f64>() / cell.per_seed.len() as f64;
        out.push_str(&cell.columns.join(","));
        out.push_str(&format!(",{mean},{}\n", cell.per_seed.len()));
    }
    out
}

/// Run a verify suite; returns (passed, report lines).
pub fn cmd_verify(suite: &str, seed: u64) -> Result<(bool, Vec<String>)> {
    let checks = run_suite(suite, seed)?;
    let mut lines = Vec::with_capacity(checks.len());
    let mut all_passed = true;
    for c in &checks {
        all_passed &= c.passed;
        lines.push(format!("{} {suite}/{}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    Ok((all_passed, lines))
}

//! The twin-experiment driver: generate a truth run, synthesize
//! observations from it, cycle forecast and analysis, and score the
//! forecast against the truth at window ends.

use crate::assimilation::{
    ekf_analysis, ekf_forecast, enkf_analysis, ensrf_analysis, etkf_analysis, inflate_additive_diag,
    inflate_additive_members, inflate_multiplicative, nmc_static_b, var3d_analysis, Covariance,
    Ensemble, InflationConfig,
};
use crate::error::{Error, Result};
use crate::localization::{letkf_analysis, LocalityScheme, LoopGeometry};
use crate::models::{integrate, IntegratorConfig, Model, State};
use crate::observations::{generate_synthetic_obs, ObservationOperatorSpec, OperatorDomain};
use crate::rng::{stream, Domain};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Which analysis scheme drives the cycle. `FreeRun` propagates without
/// assimilation and is the no-DA control.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    FreeRun,
    ThreeDVar,
    Ekf,
    Enkf,
    Ensrf,
    Etkf,
    Letkf,
}

impl FilterKind {
    pub fn name(&self) -> &'static str {
        match self {
            FilterKind::FreeRun => "free_run",
            FilterKind::ThreeDVar => "3dvar",
            FilterKind::Ekf => "ekf",
            FilterKind::Enkf => "enkf",
            FilterKind::Ensrf => "ensrf",
            FilterKind::Etkf => "etkf",
            FilterKind::Letkf => "letkf",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "free_run" | "none" => FilterKind::FreeRun,
            "3dvar" => FilterKind::ThreeDVar,
            "ekf" => FilterKind::Ekf,
            "enkf" => FilterKind::Enkf,
            "ensrf" => FilterKind::Ensrf,
            "etkf" => FilterKind::Etkf,
            "letkf" => FilterKind::Letkf,
            other => return Err(Error::invalid(format!("unknown filter: {other}"))),
        })
    }

    pub fn uses_ensemble(&self) -> bool {
        matches!(self, FilterKind::Enkf | FilterKind::Ensrf | FilterKind::Etkf | FilterKind::Letkf)
    }
}

#[derive(Debug, Clone)]
pub struct FilterConfig {
    pub kind: FilterKind,
    /// Ensemble size for ensemble filters; a FreeRun with k >= 2 propagates
    /// a free ensemble and scores its mean.
    pub ensemble_size: usize,
    pub inflation: InflationConfig,
    /// Localization scheme, LETKF only.
    pub locality: Option<LocalityScheme>,
}

impl FilterConfig {
    pub fn new(kind: FilterKind) -> Self {
        FilterConfig { kind, ensemble_size: 10, inflation: InflationConfig::default(), locality: None }
    }
}

/// What is observed and how noisy it is.
#[derive(Debug, Clone)]
pub struct ObsConfig {
    pub operator: ObservationOperatorSpec,
    pub noise_variance: f64,
}

#[derive(Debug, Clone)]
pub struct TwinExperimentConfig {
    pub model: Model,
    pub integrator: IntegratorConfig,
    pub filter: FilterConfig,
    /// Assimilation window in model time units; must be a whole number of
    /// integrator steps.
    pub window: f64,
    pub n_windows: usize,
    pub spin_up_windows: usize,
    pub obs: ObsConfig,
    /// Standard deviation of the initial analysis error per coordinate.
    pub initial_error_sd: f64,
    /// Model time discarded before the truth run starts.
    pub truth_spin_up: f64,
    /// Variables scored against truth; the observed variable by default.
    pub scored_variables: Vec<usize>,
    pub geometry: Option<LoopGeometry>,
    pub record_spread: bool,
    pub seed: u64,
}

impl TwinExperimentConfig {
    /// Lorenz defaults: x1-only observations with variance 0.05, window
    /// 0.25, initial error variance 0.01.
    pub fn new(model: Model, filter: FilterConfig) -> Self {
        TwinExperimentConfig {
            model,
            integrator: IntegratorConfig::default(),
            filter,
            window: 0.25,
            n_windows: 600,
            spin_up_windows: 100,
            obs: ObsConfig {
                operator: ObservationOperatorSpec::SelectIndices(vec![0]),
                noise_variance: 0.05,
            },
            initial_error_sd: 0.1,
            truth_spin_up: 10.0,
            scored_variables: vec![0],
            geometry: None,
            record_spread: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        self.filter.inflation.validate()?;
        if self.n_windows == 0 || self.spin_up_windows >= self.n_windows {
            return Err(Error::invalid(format!(
                "need n_windows > spin_up_windows >= 0, got {} and {}",
                self.n_windows, self.spin_up_windows
            )));
        }
        if !(self.window > 0.0) {
            return Err(Error::invalid(format!("window must be positive, got {}", self.window)));
        }
        let steps = self.window / self.integrator.dt;
        if (steps - steps.round()).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "window {} is not a whole number of dt = {} steps",
                self.window, self.integrator.dt
            )));
        }
        if !(self.obs.noise_variance >= 0.0) {
            return Err(Error::invalid("observation noise variance must be nonnegative"));
        }
        let k = self.filter.ensemble_size;
        match self.filter.kind {
            FilterKind::Enkf if k < 3 => {
                return Err(Error::invalid("EnKF needs k >= 3 for the leave-one-out covariance"));
            }
            FilterKind::Ensrf | FilterKind::Etkf | FilterKind::Letkf if k < 2 => {
                return Err(Error::invalid("ensemble filters need k >= 2"));
            }
            FilterKind::Letkf => {
                if self.geometry.is_none() || self.filter.locality.is_none() {
                    return Err(Error::invalid("LETKF needs a geometry and a locality scheme"));
                }
            }
            _ => {}
        }
        if let Some(geom) = &self.geometry {
            if geom.state_dim() != self.model.dim() {
                return Err(Error::DimensionMismatch { expected: self.model.dim(), got: geom.state_dim() });
            }
        }
        for &v in &self.scored_variables {
            if v >= self.model.dim() {
                return Err(Error::invalid(format!("scored variable {v} out of range")));
            }
        }
        Ok(())
    }

    fn domain(&self) -> OperatorDomain<'_> {
        match &self.geometry {
            Some(g) => OperatorDomain::Geometry(g),
            None => OperatorDomain::ModelDim(self.model.dim()),
        }
    }
}

/// Per-window scores and diagnostics from one twin experiment.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub window_times: Vec<f64>,
    /// Forecast-minus-truth score at each window end, before the analysis.
    pub forecast_rmse: Vec<f64>,
    /// Analysis-minus-truth score at each window end.
    pub analysis_rmse: Vec<f64>,
    pub increment_norms: Vec<f64>,
    /// Quadratic mean of the forecast score over the scored windows.
    pub summary_forecast_rmse: f64,
    pub summary_analysis_rmse: f64,
    pub n_windows: usize,
    pub spin_up_windows: usize,
    /// Member-minus-analysis-mean samples of the scored variables.
    pub spread_samples: Vec<f64>,
    pub degenerate_windows: usize,
    pub windows_without_observations: usize,
}

impl RunResult {
    pub fn scored_windows(&self) -> usize {
        self.n_windows - self.spin_up_windows
    }
}

enum CycleState {
    Single(State),
    Gaussian { state: State, cov: Covariance },
    Members(Ensemble),
}

impl CycleState {
    fn mean(&self) -> State {
        match self {
            CycleState::Single(s) => s.clone(),
            CycleState::Gaussian { state, .. } => state.clone(),
            CycleState::Members(e) => e.mean(),
        }
    }
}

fn scored_error(a: &State, b: &State, scored: &[f64], variables: &[usize]) -> f64 {
    let _ = scored;
    let sum: f64 = variables.iter().map(|&v| (a[v] - b[v]) * (a[v] - b[v])).sum();
    (sum / variables.len() as f64).sqrt()
}

fn wrap_window<T>(w: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::WindowFailed { window: w, source: Box::new(e) })
}

fn multiplicative_member_inflation(ens: &Ensemble, delta: f64) -> Result<Ensemble> {
    if delta == 0.0 {
        return Ok(ens.clone());
    }
    let mean = ens.mean();
    let factor = (1.0 + delta).sqrt();
    let members = ens.members().iter().map(|m| &mean + (m - &mean) * factor).collect();
    Ensemble::new(members)
}

/// Run one seeded twin experiment; bitwise deterministic in the config.
pub fn run_twin_experiment(config: &TwinExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    let model = &config.model;
    let n = model.dim();
    let integrator = &config.integrator;
    let stamp_tol = integrator.dt / 2.0;
    let seed = config.seed;
    let domain = config.domain();

    // Truth: a random state relaxed onto the attractor, then a free run
    // spanning every assimilation window.
    let mut rng_truth = stream(seed, Domain::TruthInit);
    let ic = State::from_fn(n, |_, _| rng_truth.gen_range(-10.0..10.0));
    let spun = integrate(model, &ic, integrator, config.truth_spin_up)?;
    let truth = integrate(model, spun.last(), integrator, config.window * config.n_windows as f64)?;

    let obs_all = generate_synthetic_obs(
        &truth,
        &config.obs.operator,
        &domain,
        config.obs.noise_variance,
        config.window,
        &mut stream(seed, Domain::ObsNoise),
    )?;

    // Initial analysis: truth plus N(0, initial_error_sd^2) per coordinate.
    let mut rng_init = stream(seed, Domain::InitError);
    let init_noise = Normal::new(0.0, config.initial_error_sd).map_err(|_| Error::invalid("bad sd"))?;
    let x_a0 = &truth.states[0] + State::from_fn(n, |_, _| init_noise.sample(&mut rng_init));

    let make_members = |rng: &mut ChaCha8Rng| -> Result<Ensemble> {
        let members = (0..config.filter.ensemble_size)
            .map(|_| &x_a0 + State::from_fn(n, |_, _| init_noise.sample(rng)))
            .collect();
        Ensemble::new(members)
    };

    let mut rng_spread = stream(seed, Domain::EnsembleSpread);
    let mut cycle = match config.filter.kind {
        FilterKind::FreeRun => {
            if config.filter.ensemble_size >= 2 {
                CycleState::Members(make_members(&mut rng_spread)?)
            } else {
                CycleState::Single(x_a0.clone())
            }
        }
        FilterKind::ThreeDVar | FilterKind::Ekf => CycleState::Gaussian {
            state: x_a0.clone(),
            cov: Covariance::scaled_identity(n, config.initial_error_sd * config.initial_error_sd),
        },
        _ => CycleState::Members(make_members(&mut rng_spread)?),
    };

    // Static background for 3D-Var from lagged forecast differences.
    let b_static = if config.filter.kind == FilterKind::ThreeDVar {
        let mut rng_b = stream(seed, Domain::Generic(100));
        let base = State::from_fn(n, |_, _| rng_b.gen_range(-10.0..10.0));
        let warm = integrate(model, &base, integrator, 5.0)?;
        let mut ics = Vec::with_capacity(25);
        let mut state = warm.last().clone();
        for _ in 0..25 {
            let leg = integrate(model, &state, integrator, 1.0)?;
            state = leg.last().clone();
            ics.push(state.clone());
        }
        Some(nmc_static_b(model, integrator, &ics, 0.48, 0.24, 1.0)?)
    } else {
        None
    };

    let mut rng_obs_pert = stream(seed, Domain::ObsPerturbation);
    let mut rng_inflation = stream(seed, Domain::Inflation);
    let delta = config.filter.inflation.delta;
    let mu = config.filter.inflation.mu;

    let mut result = RunResult {
        window_times: Vec::with_capacity(config.n_windows),
        forecast_rmse: Vec::with_capacity(config.n_windows),
        analysis_rmse: Vec::with_capacity(config.n_windows),
        increment_norms: Vec::with_capacity(config.n_windows),
        summary_forecast_rmse: 0.0,
        summary_analysis_rmse: 0.0,
        n_windows: config.n_windows,
        spin_up_windows: config.spin_up_windows,
        spread_samples: Vec::new(),
        degenerate_windows: 0,
        windows_without_observations: 0,
    };

    for w in 1..=config.n_windows {
        let t = w as f64 * config.window;

        // Forecast step.
        let forecast = match &cycle {
            CycleState::Single(s) => {
                CycleState::Single(wrap_window(w, integrate(model, s, integrator, config.window))?.last().clone())
            }
            CycleState::Gaussian { state, cov } => {
                if config.filter.kind == FilterKind::ThreeDVar {
                    let traj = wrap_window(w, integrate(model, state, integrator, config.window))?;
                    CycleState::Gaussian { state: traj.last().clone(), cov: cov.clone() }
                } else {
                    let f = wrap_window(
                        w,
                        ekf_forecast(state, cov, model, integrator, config.window, &Covariance::zeros(n)),
                    )?;
                    let mut p_f = inflate_multiplicative(&f.covariance, delta);
                    p_f = inflate_additive_diag(&p_f, mu, &mut rng_inflation);
                    CycleState::Gaussian { state: f.state, cov: p_f }
                }
            }
            CycleState::Members(ens) => {
                let mut members = Vec::with_capacity(ens.k());
                for m in ens.members() {
                    members.push(wrap_window(w, integrate(model, m, integrator, config.window))?.last().clone());
                }
                CycleState::Members(Ensemble::new(members)?)
            }
        };

        let truth_idx = truth
            .nearest_stamp(t, stamp_tol)
            .ok_or_else(|| Error::invalid(format!("truth trajectory has no stamp near t = {t}")))?;
        let truth_state = &truth.states[truth_idx];
        let forecast_mean = forecast.mean();
        result.window_times.push(t);
        result
            .forecast_rmse
            .push(scored_error(&forecast_mean, truth_state, &[], &config.scored_variables));

        // Analysis step.
        let obs_w = obs_all.at_time(t, stamp_tol);
        let (analysis, increment) = if obs_w.is_empty() || config.filter.kind == FilterKind::FreeRun {
            if obs_w.is_empty() {
                result.windows_without_observations += 1;
            }
            (forecast, 0.0)
        } else {
            let h = wrap_window(w, obs_w.operator_matrix(&domain))?;
            let r = obs_w.error_covariance();
            let y = obs_w.values();
            match (&forecast, config.filter.kind) {
                (CycleState::Gaussian { state, cov }, FilterKind::ThreeDVar) => {
                    let b = b_static.as_ref().expect("3dvar carries a static background");
                    let res = wrap_window(w, var3d_analysis(state, b, &h, &r, &y))?;
                    let inc = res.increment_norm;
                    (CycleState::Gaussian { state: res.state, cov: cov.clone() }, inc)
                }
                (CycleState::Gaussian { state, cov }, FilterKind::Ekf) => {
                    let res = wrap_window(w, ekf_analysis(state, cov, &h, &r, &y))?;
                    let inc = res.increment_norm;
                    (
                        CycleState::Gaussian {
                            state: res.state,
                            cov: res.covariance.expect("EKF analysis returns a covariance"),
                        },
                        inc,
                    )
                }
                (CycleState::Members(ens), kind) => {
                    let res = match kind {
                        FilterKind::Enkf => wrap_window(
                            w,
                            enkf_analysis(ens, &h, &r, &y, &config.filter.inflation, &mut rng_obs_pert),
                        )?,
                        FilterKind::Ensrf => {
                            let inflated = wrap_window(w, multiplicative_member_inflation(ens, delta))?;
                            let inflated = inflate_additive_members(&inflated, mu, &mut rng_inflation);
                            wrap_window(w, ensrf_analysis(&inflated, &h, &r, &y))?
                        }
                        FilterKind::Etkf => {
                            let inflated = inflate_additive_members(ens, mu, &mut rng_inflation);
                            wrap_window(w, etkf_analysis(&inflated, &h, &r, &y, 1.0 + delta))?
                        }
                        FilterKind::Letkf => {
                            let geom = config.geometry.as_ref().expect("validated");
                            let scheme = config.filter.locality.as_ref().expect("validated");
                            let inflated = inflate_additive_members(ens, mu, &mut rng_inflation);
                            wrap_window(w, letkf_analysis(&inflated, &obs_w, geom, scheme, 1.0 + delta))?
                        }
                        _ => unreachable!("ensemble state implies an ensemble filter"),
                    };
                    if res.diagnostics.iter().any(|d| {
                        matches!(d, crate::assimilation::Diagnostic::DegenerateEnsemble)
                    }) {
                        result.degenerate_windows += 1;
                    }
                    let inc = res.increment_norm;
                    (CycleState::Members(res.ensemble.expect("ensemble analysis returns members")), inc)
                }
                _ => unreachable!("cycle state matches the filter kind"),
            }
        };

        let analysis_mean = analysis.mean();
        result
            .analysis_rmse
            .push(scored_error(&analysis_mean, truth_state, &[], &config.scored_variables));
        result.increment_norms.push(increment);

        if config.record_spread && w > config.spin_up_windows {
            if let CycleState::Members(ens) = &analysis {
                for m in ens.members() {
                    for &v in &config.scored_variables {
                        result.spread_samples.push(m[v] - analysis_mean[v]);
                    }
                }
            }
        }

        cycle = analysis;
    }

    let scored = |series: &[f64]| -> f64 {
        let tail = &series[config.spin_up_windows..];
        (tail.iter().map(|e| e * e).sum::<f64>() / tail.len() as f64).sqrt()
    };
    result.summary_forecast_rmse = scored(&result.forecast_rmse);
    result.summary_analysis_rmse = scored(&result.analysis_rmse);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Lorenz63Params;

    fn lorenz() -> Model {
        Model::Lorenz63(Lorenz63Params::default())
    }

    fn small_config(kind: FilterKind) -> TwinExperimentConfig {
        let mut filter = FilterConfig::new(kind);
        filter.inflation = InflationConfig { delta: 0.05, mu: 0.0 };
        let mut config = TwinExperimentConfig::new(lorenz(), filter);
        config.n_windows = 40;
        config.spin_up_windows = 10;
        config.seed = 11;
        config
    }

    #[test]
    fn identical_seeds_are_bitwise_identical() {
        for kind in [FilterKind::Etkf, FilterKind::Enkf, FilterKind::Ekf] {
            let config = small_config(kind);
            let a = run_twin_experiment(&config).unwrap();
            let b = run_twin_experiment(&config).unwrap();
            assert_eq!(a.forecast_rmse, b.forecast_rmse, "{kind:?} not deterministic");
            assert_eq!(a.analysis_rmse, b.analysis_rmse);
            assert_eq!(a.increment_norms, b.increment_norms);
        }
    }

    #[test]
    fn near_perfect_observations_pin_the_analysis() {
        let mut config = small_config(FilterKind::Etkf);
        config.obs.operator = ObservationOperatorSpec::SelectIndices(vec![0, 1, 2]);
        config.obs.noise_variance = 1e-12;
        config.n_windows = 30;
        config.spin_up_windows = 5;
        let run = run_twin_experiment(&config).unwrap();
        assert!(
            run.summary_analysis_rmse < 1e-3,
            "analysis should track truth, rmse {}",
            run.summary_analysis_rmse
        );
    }

    #[test]
    fn free_run_saturates_far_above_da() {
        let mut free = small_config(FilterKind::FreeRun);
        free.n_windows = 200;
        free.spin_up_windows = 100;
        let mut da = small_config(FilterKind::Etkf);
        da.n_windows = 200;
        da.spin_up_windows = 100;
        let f = run_twin_experiment(&free).unwrap();
        let d = run_twin_experiment(&da).unwrap();
        assert!(
            f.summary_forecast_rmse > 3.0 * d.summary_forecast_rmse,
            "free {} vs DA {}",
            f.summary_forecast_rmse,
            d.summary_forecast_rmse
        );
    }

    #[test]
    fn scoring_excludes_spin_up() {
        let config = small_config(FilterKind::Etkf);
        let run = run_twin_experiment(&config).unwrap();
        assert_eq!(run.scored_windows(), 30);
        let manual = (run.forecast_rmse[10..].iter().map(|e| e * e).sum::<f64>() / 30.0).sqrt();
        assert_eq!(manual, run.summary_forecast_rmse);
    }

    #[test]
    fn window_must_align_with_dt() {
        let mut config = small_config(FilterKind::Etkf);
        config.window = 0.2543;
        assert!(config.validate().is_err());
    }

    #[test]
    fn letkf_requires_geometry() {
        let config = small_config(FilterKind::Letkf);
        assert!(config.validate().is_err());
    }
}

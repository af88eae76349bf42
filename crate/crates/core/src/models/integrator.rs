//! Fixed-step time integration and tangent linear model propagation.
//!
//! The tangent linear operator is obtained by differentiating the discrete
//! update of the chosen scheme, not by discretizing the linearized ODE, so
//! L dx matches M(x + dx) - M(x) to second order in the perturbation.

use super::{check_dim, Model, State};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    /// Second-order Runge-Kutta (Heun / explicit trapezoid).
    Rk2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Time step in model units.
    pub dt: f64,
    /// Wall-clock seconds per model time unit; 390 s windows map to 0.26
    /// model units at the default of 1500.
    pub time_scale_seconds: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { scheme: Scheme::Rk2, dt: 0.01, time_scale_seconds: 1500.0 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.time_scale_seconds > 0.0) {
            return Err(Error::invalid(format!(
                "time_scale_seconds must be positive, got {}",
                self.time_scale_seconds
            )));
        }
        Ok(())
    }

    /// Convert a wall-clock window length to model time units.
    pub fn seconds_to_model_time(&self, seconds: f64) -> f64 {
        seconds / self.time_scale_seconds
    }

    /// Number of whole steps covering `duration` (rounded to nearest).
    pub fn step_count(&self, duration: f64) -> usize {
        (duration / self.dt).round() as usize
    }
}

/// A time-stamped sequence of states from one integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Index of the stamp nearest to `t`, if within `tol`.
    pub fn nearest_stamp(&self, t: f64, tol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &ti) in self.times.iter().enumerate() {
            let d = (ti - t).abs();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.filter(|&(_, d)| d <= tol).map(|(i, _)| i)
    }
}

fn step(model: &Model, state: &State, scheme: Scheme, dt: f64) -> Result<State> {
    match scheme {
        Scheme::Euler => Ok(state + model.rhs(state)? * dt),
        Scheme::Rk2 => {
            let k1 = model.rhs(state)?;
            let k2 = model.rhs(&(state + &k1 * dt))?;
            Ok(state + (k1 + k2) * (dt * 0.5))
        }
    }
}

/// Derivative of one discrete step with respect to the initial state.
fn step_tangent(model: &Model, state: &State, scheme: Scheme, dt: f64) -> Result<DMatrix<f64>> {
    let n = model.dim();
    let eye = DMatrix::identity(n, n);
    match scheme {
        Scheme::Euler => Ok(&eye + model.jacobian(state)? * dt),
        Scheme::Rk2 => {
            // x' = x + dt/2 (f(x) + f(x + dt f(x)))
            // dx'/dx = I + dt/2 (J(x) + J(x + dt f(x)) (I + dt J(x)))
            let j1 = model.jacobian(state)?;
            let mid = state + model.rhs(state)? * dt;
            let j2 = model.jacobian(&mid)?;
            Ok(&eye + (&j1 + &j2 * (&eye + &j1 * dt)) * (dt * 0.5))
        }
    }
}

/// Integrate the model forward by `duration` model time units.
///
/// The trajectory holds the initial state plus one state per step; a
/// non-finite coordinate aborts with the offending step index.
pub fn integrate(model: &Model, state: &State, config: &IntegratorConfig, duration: f64) -> Result<Trajectory> {
    config.validate()?;
    check_dim(model.dim(), state)?;
    if duration < 0.0 {
        return Err(Error::invalid(format!("duration must be nonnegative, got {duration}")));
    }
    let n_steps = config.step_count(duration);
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    states.push(state.clone());
    let mut x = state.clone();
    for i in 0..n_steps {
        x = step(model, &x, config.scheme, config.dt)?;
        let t = (i + 1) as f64 * config.dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { step: i + 1, time: t });
        }
        times.push(t);
        states.push(x.clone());
    }
    Ok(Trajectory { times, states })
}

/// Linear map from an initial perturbation to a final perturbation over a
/// window of the nonlinear trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentLinearOperator {
    pub matrix: DMatrix<f64>,
}

impl TangentLinearOperator {
    pub fn identity(n: usize) -> Self {
        TangentLinearOperator { matrix: DMatrix::identity(n, n) }
    }

    pub fn apply(&self, perturbation: &State) -> State {
        &self.matrix * perturbation
    }
}

/// Propagate the tangent linear model along the trajectory started at
/// `state`, accumulating the exact derivative of each discrete step.
pub fn propagate_tlm(model: &Model, state: &State, config: &IntegratorConfig, duration: f64) -> Result<TangentLinearOperator> {
    config.validate()?;
    check_dim(model.dim(), state)?;
    if duration < 0.0 {
        return Err(Error::invalid(format!("duration must be nonnegative, got {duration}")));
    }
    let n_steps = config.step_count(duration);
    let mut x = state.clone();
    let mut l = DMatrix::identity(model.dim(), model.dim());
    for i in 0..n_steps {
        l = step_tangent(model, &x, config.scheme, config.dt)? * l;
        x = step(model, &x, config.scheme, config.dt)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { step: i + 1, time: (i + 1) as f64 * config.dt });
        }
    }
    Ok(TangentLinearOperator { matrix: l })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Lorenz63Params, Model};
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn lorenz() -> Model {
        Model::Lorenz63(Lorenz63Params::default())
    }

    #[test]
    fn zero_duration_returns_initial_state_only() {
        let x = State::from_vec(vec![1.0, 2.0, 3.0]);
        let traj = integrate(&lorenz(), &x, &IntegratorConfig::default(), 0.0).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states[0], x);
        let tlm = propagate_tlm(&lorenz(), &x, &IntegratorConfig::default(), 0.0).unwrap();
        assert_eq!(tlm.matrix, DMatrix::identity(3, 3));
    }

    #[test]
    fn fixed_point_stays_put() {
        let c = 72.0f64.sqrt();
        let x = State::from_vec(vec![c, c, 27.0]);
        let traj = integrate(&lorenz(), &x, &IntegratorConfig::default(), 2.0).unwrap();
        let end = traj.last();
        for i in 0..3 {
            assert!((end[i] - x[i]).abs() < 1e-8, "drifted from equilibrium: {}", end[i] - x[i]);
        }
    }

    #[test]
    fn integration_is_deterministic() {
        let x = State::from_vec(vec![1.0, 1.0, 1.0]);
        let a = integrate(&lorenz(), &x, &IntegratorConfig::default(), 5.0).unwrap();
        let b = integrate(&lorenz(), &x, &IntegratorConfig::default(), 5.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rk2_is_second_order() {
        // Richardson check against a dt/100 reference over 1 model unit.
        let x = State::from_vec(vec![1.0, 3.0, 15.0]);
        let reference = integrate(
            &lorenz(),
            &x,
            &IntegratorConfig { dt: 1e-4, ..Default::default() },
            1.0,
        )
        .unwrap();
        let coarse = integrate(&lorenz(), &x, &IntegratorConfig { dt: 0.01, ..Default::default() }, 1.0).unwrap();
        let fine = integrate(&lorenz(), &x, &IntegratorConfig { dt: 0.005, ..Default::default() }, 1.0).unwrap();
        let err_coarse = (coarse.last() - reference.last()).norm();
        let err_fine = (fine.last() - reference.last()).norm();
        let ratio = err_coarse / err_fine;
        assert!((2.5..6.0).contains(&ratio), "expected ~4x error reduction, got {ratio}");
    }

    #[test]
    fn blow_up_is_reported_with_step_index() {
        // Huge dt makes Lorenz diverge quickly.
        let x = State::from_vec(vec![10.0, 10.0, 10.0]);
        let err = integrate(&lorenz(), &x, &IntegratorConfig { dt: 10.0, ..Default::default() }, 1000.0);
        match err {
            Err(Error::BlowUp { step, .. }) => assert!(step >= 1),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn tlm_predicts_perturbation_growth_to_second_order() {
        let mut rng = crate::rng::stream(5, crate::rng::Domain::Generic(2));
        let config = IntegratorConfig::default();
        let window = 0.1;
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut ratios = Vec::new();
        for _ in 0..100 {
            let base = State::from_fn(3, |_, _| rng.gen_range(-15.0..15.0));
            let tlm = propagate_tlm(&lorenz(), &base, &config, window).unwrap();
            let reference = integrate(&lorenz(), &base, &config, window).unwrap();
            let direction = State::from_fn(3, |_, _| normal.sample(&mut rng));

            let discrepancy = |eps: f64| {
                let delta = &direction * eps;
                let perturbed = integrate(&lorenz(), &(&base + &delta), &config, window).unwrap();
                let nonlinear = perturbed.last() - reference.last();
                (nonlinear - tlm.apply(&delta)).norm()
            };
            let d1 = discrepancy(0.1);
            let d2 = discrepancy(0.05);
            if d1 > 1e-12 {
                ratios.push(d2 / d1);
            }
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((0.2..0.3).contains(&mean), "second-order remainder ratio {mean}");
    }

    #[test]
    fn tlm_of_zero_perturbation_is_zero() {
        let x = State::from_vec(vec![2.0, -1.0, 20.0]);
        let tlm = propagate_tlm(&lorenz(), &x, &IntegratorConfig::default(), 0.3).unwrap();
        assert_eq!(tlm.apply(&State::zeros(3)), State::zeros(3));
    }
}

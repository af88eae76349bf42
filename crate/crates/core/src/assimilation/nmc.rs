//! Static background covariance estimated from lagged forecast differences.

use super::Covariance;
use crate::error::{Error, Result};
use crate::models::{integrate, IntegratorConfig, Model, State};

/// B ~ scale * mean over initial conditions of
/// (x_f(lead_long) - x_f(lead_short)) (x_f(lead_long) - x_f(lead_short))^T.
///
/// Around fifty short-range forecasts give a usable estimate; two is the
/// bare minimum accepted.
pub fn nmc_static_b(
    model: &Model,
    config: &IntegratorConfig,
    initial_conditions: &[State],
    lead_long: f64,
    lead_short: f64,
    scale: f64,
) -> Result<Covariance> {
    if initial_conditions.len() < 2 {
        return Err(Error::invalid(format!(
            "NMC estimate needs at least 2 initial conditions, got {}",
            initial_conditions.len()
        )));
    }
    if !(lead_long > lead_short && lead_short > 0.0) {
        return Err(Error::invalid(format!(
            "leads must satisfy lead_long > lead_short > 0, got {lead_long} and {lead_short}"
        )));
    }
    let n = model.dim();
    let mut sum = nalgebra::DMatrix::<f64>::zeros(n, n);
    for ic in initial_conditions {
        let long = integrate(model, ic, config, lead_long)?;
        let short = integrate(model, ic, config, lead_short)?;
        let d = long.last() - short.last();
        sum += &d * d.transpose();
    }
    sum *= scale / initial_conditions.len() as f64;
    Ok(Covariance::symmetrized(&sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Lorenz63Params, Model};

    fn lorenz() -> Model {
        Model::Lorenz63(Lorenz63Params::default())
    }

    #[test]
    fn duplicate_ics_give_single_outer_product() {
        let ic = State::from_vec(vec![1.0, 2.0, 20.0]);
        let config = IntegratorConfig::default();
        let b = nmc_static_b(&lorenz(), &config, &[ic.clone(), ic.clone()], 0.48, 0.24, 1.0).unwrap();

        let long = integrate(&lorenz(), &ic, &config, 0.48).unwrap();
        let short = integrate(&lorenz(), &ic, &config, 0.24).unwrap();
        let d = long.last() - short.last();
        let expected = &d * d.transpose();
        assert!((b.matrix() - expected).norm() < 1e-12);
        // Rank one: only a single independent direction.
        assert!(b.matrix().rank(1e-8) == 1);
    }

    #[test]
    fn estimate_is_symmetric_psd() {
        use rand::Rng;
        let mut rng = crate::rng::stream(17, crate::rng::Domain::Generic(7));
        let ics: Vec<State> = (0..10)
            .map(|_| State::from_fn(3, |_, _| rng.gen_range(-15.0..15.0)))
            .collect();
        let b = nmc_static_b(&lorenz(), &IntegratorConfig::default(), &ics, 0.48, 0.24, 1.0).unwrap();
        assert!(crate::linalg::asymmetry(b.matrix()) < 1e-12);
        assert!(b.is_psd());
    }

    #[test]
    fn bad_leads_are_rejected() {
        let ics = vec![State::zeros(3), State::zeros(3)];
        let config = IntegratorConfig::default();
        assert!(nmc_static_b(&lorenz(), &config, &ics, 0.24, 0.48, 1.0).is_err());
        assert!(nmc_static_b(&lorenz(), &config, &ics[..1], 0.48, 0.24, 1.0).is_err());
    }
}

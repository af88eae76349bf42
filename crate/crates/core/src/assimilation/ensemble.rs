//! Ensembles and the covariance estimates built from them.

use super::Covariance;
use crate::error::{Error, Result};
use crate::models::State;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// An ordered collection of k model states.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<State>,
}

impl Ensemble {
    pub fn new(members: Vec<State>) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::invalid(format!("an ensemble needs k >= 2 members, got {}", members.len())));
        }
        let dim = members[0].len();
        if members.iter().any(|m| m.len() != dim) {
            return Err(Error::invalid("ensemble members must share one dimension"));
        }
        Ok(Ensemble { members })
    }

    pub fn k(&self) -> usize {
        self.members.len()
    }

    pub fn dim(&self) -> usize {
        self.members[0].len()
    }

    pub fn members(&self) -> &[State] {
        &self.members
    }

    pub fn mean(&self) -> State {
        let mut sum = State::zeros(self.dim());
        for m in &self.members {
            sum += m;
        }
        sum / self.k() as f64
    }

    /// X: n x k matrix whose columns are member minus mean.
    pub fn perturbation_matrix(&self) -> DMatrix<f64> {
        let mean = self.mean();
        let mut x = DMatrix::zeros(self.dim(), self.k());
        for (j, m) in self.members.iter().enumerate() {
            x.set_column(j, &(m - &mean));
        }
        x
    }

    /// Rebuild members as mean + column j of the perturbation matrix.
    pub fn from_mean_and_perturbations(mean: &State, x: &DMatrix<f64>) -> Result<Self> {
        if x.nrows() != mean.len() {
            return Err(Error::DimensionMismatch { expected: mean.len(), got: x.nrows() });
        }
        let members = (0..x.ncols()).map(|j| mean + x.column(j)).collect();
        Ensemble::new(members)
    }

    /// True when all members coincide to machine precision.
    pub fn is_degenerate(&self) -> bool {
        self.perturbation_matrix().norm() == 0.0
    }
}

/// How the forecast covariance is estimated from the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceMode {
    /// Each member is compared against the mean of the other k-1 members,
    /// normalized by 1/(k-2); comparing a member against an average that
    /// contains it would understate the spread.
    #[default]
    LeaveOneOut,
    /// The usual sample covariance with 1/(k-1).
    Standard,
}

/// Forecast error covariance estimated from ensemble spread.
pub fn ensemble_covariance(ens: &Ensemble, mode: CovarianceMode) -> Result<Covariance> {
    let k = ens.k();
    match mode {
        CovarianceMode::LeaveOneOut if k < 3 => {
            return Err(Error::invalid(format!("leave-one-out covariance needs k >= 3, got {k}")));
        }
        _ => {}
    }
    let n = ens.dim();
    let mean = ens.mean();
    let mut sum = DMatrix::zeros(n, n);
    match mode {
        CovarianceMode::Standard => {
            for m in ens.members() {
                let d = m - &mean;
                sum += &d * d.transpose();
            }
            sum /= (k - 1) as f64;
        }
        CovarianceMode::LeaveOneOut => {
            // Mean without member j: (k mean - x_j) / (k - 1).
            let kf = k as f64;
            for m in ens.members() {
                let loo_mean = (&mean * kf - m) / (kf - 1.0);
                let d = m - loo_mean;
                sum += &d * d.transpose();
            }
            sum /= kf - 2.0;
        }
    }
    Ok(Covariance::symmetrized(&sum))
}

/// Add an independent uniform [0, mu]^n draw to every member.
pub fn inflate_additive_state<R: Rng>(ens: &Ensemble, mu: f64, rng: &mut R) -> Ensemble {
    if mu == 0.0 {
        return ens.clone();
    }
    let members = ens
        .members()
        .iter()
        .map(|m| {
            let shift = State::from_fn(m.len(), |_, _| mu * rng.gen::<f64>());
            m + shift
        })
        .collect();
    Ensemble { members }
}

/// Additive covariance inflation realized in ensemble space: every member
/// receives an independent N(0, diag(mu * nu)) draw, nu ~ U[0,1]^n shared
/// across members, so the expected spread gain equals diag(mu * nu).
///
/// Square-root filters never materialize P_f, so this stands in for
/// `inflate_additive_diag` when cycling them.
pub fn inflate_additive_members<R: Rng>(ens: &Ensemble, mu: f64, rng: &mut R) -> Ensemble {
    if mu == 0.0 {
        return ens.clone();
    }
    let n = ens.dim();
    let sds: Vec<f64> = (0..n).map(|_| (mu * rng.gen::<f64>()).sqrt()).collect();
    let members = ens
        .members()
        .iter()
        .map(|m| {
            let noise = State::from_fn(n, |i, _| {
                Normal::new(0.0, sds[i]).map(|d| d.sample(rng)).unwrap_or(0.0)
            });
            m + noise
        })
        .collect();
    Ensemble { members }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ens_1d(values: &[f64]) -> Ensemble {
        Ensemble::new(values.iter().map(|&v| State::from_vec(vec![v])).collect()).unwrap()
    }

    #[test]
    fn identical_members_give_zero_covariance() {
        let ens = ens_1d(&[3.0, 3.0, 3.0]);
        for mode in [CovarianceMode::Standard, CovarianceMode::LeaveOneOut] {
            let c = ensemble_covariance(&ens, mode).unwrap();
            assert_eq!(c.matrix()[(0, 0)], 0.0);
        }
        assert!(ens.is_degenerate());
    }

    #[test]
    fn standard_two_member_variance() {
        // Members 0 and 2: mean 1, (1/(2-1)) ((0-1)^2 + (2-1)^2) = 2.
        let c = ensemble_covariance(&ens_1d(&[0.0, 2.0]), CovarianceMode::Standard).unwrap();
        assert_relative_eq!(c.matrix()[(0, 0)], 2.0);
    }

    #[test]
    fn leave_one_out_scaling_identity() {
        // LOO = standard * (k/(k-1))^2 * (k-1)/(k-2) in one dimension.
        let values = [0.3, -1.2, 2.5, 0.9, -0.4];
        let k = values.len() as f64;
        let std = ensemble_covariance(&ens_1d(&values), CovarianceMode::Standard).unwrap();
        let loo = ensemble_covariance(&ens_1d(&values), CovarianceMode::LeaveOneOut).unwrap();
        let factor = (k / (k - 1.0)).powi(2) * (k - 1.0) / (k - 2.0);
        assert_relative_eq!(loo.matrix()[(0, 0)], std.matrix()[(0, 0)] * factor, max_relative = 1e-12);
    }

    #[test]
    fn leave_one_out_needs_three_members() {
        assert!(ensemble_covariance(&ens_1d(&[0.0, 1.0]), CovarianceMode::LeaveOneOut).is_err());
    }

    #[test]
    fn perturbations_sum_to_zero() {
        let ens = ens_1d(&[1.0, 4.0, -2.0]);
        let x = ens.perturbation_matrix();
        let row_sum: f64 = (0..x.ncols()).map(|j| x[(0, j)]).sum();
        assert!(row_sum.abs() < 1e-14);
    }

    #[test]
    fn additive_state_inflation_bounds() {
        let ens = ens_1d(&[0.0, 1.0, 2.0]);
        let mu = 0.5;
        let mut rng = crate::rng::stream(2, crate::rng::Domain::Inflation);
        let inflated = inflate_additive_state(&ens, mu, &mut rng);
        for (old, new) in ens.members().iter().zip(inflated.members()) {
            let shift = (new - old).norm();
            assert!(shift <= mu * (1.0f64).sqrt() + 1e-12);
            assert!(new[0] >= old[0]);
        }
        // mu = 0 leaves the ensemble untouched.
        assert_eq!(inflate_additive_state(&ens, 0.0, &mut rng), ens);
    }

    #[test]
    fn additive_state_mean_shift_is_half_mu() {
        let ens = ens_1d(&[0.0, 0.0, 0.0]);
        let mu = 0.6;
        let mut rng = crate::rng::stream(8, crate::rng::Domain::Inflation);
        let mut total = 0.0;
        let rounds = 5_000;
        for _ in 0..rounds {
            total += inflate_additive_state(&ens, mu, &mut rng).mean()[0];
        }
        let mean_shift = total / rounds as f64;
        assert!((mean_shift - mu / 2.0).abs() < 0.01, "mean shift {mean_shift}");
    }

    #[test]
    fn additive_member_inflation_grows_spread_without_bias() {
        let ens = ens_1d(&[-1.0, 0.0, 1.0]);
        let mu = 0.4;
        let mut rng = crate::rng::stream(12, crate::rng::Domain::Inflation);
        let rounds = 4_000;
        let mut mean_total = 0.0;
        let mut var_total = 0.0;
        for _ in 0..rounds {
            let inflated = inflate_additive_members(&ens, mu, &mut rng);
            mean_total += inflated.mean()[0];
            var_total += ensemble_covariance(&inflated, CovarianceMode::Standard).unwrap().matrix()[(0, 0)];
        }
        let mean = mean_total / rounds as f64;
        let var = var_total / rounds as f64;
        assert!(mean.abs() < 0.02, "unexpected bias {mean}");
        // Base variance 1, expected gain mu/2 = 0.2.
        assert!((var - 1.2).abs() < 0.05, "expected spread gain, got variance {var}");
    }
}

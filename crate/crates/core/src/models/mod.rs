//! Forecast models: Lorenz 63, the Ehrhard-Muller convection loop, and a
//! ring of independent Lorenz sites used to exercise localization.

mod ehrhard_muller;
mod integrator;
mod lorenz;

pub use ehrhard_muller::{
    em_dimensionalize, em_jacobian, em_nondimensionalize, em_rhs, h_friction, h_friction_deriv,
    EhrhardMullerParams, FluidConstants, PhysicalState,
};
pub use integrator::{integrate, propagate_tlm, IntegratorConfig, Scheme, TangentLinearOperator, Trajectory};
pub use lorenz::{lorenz63_jacobian, lorenz63_rhs, Lorenz63Params};

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// A point in model phase space, ordered by cell then variable.
pub type State = DVector<f64>;

pub(crate) fn check_dim(expected: usize, state: &State) -> Result<()> {
    if state.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: state.len() });
    }
    Ok(())
}

/// A dynamical system dx/dt = F(x) with an analytic Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Lorenz63(Lorenz63Params),
    EhrhardMuller(EhrhardMullerParams),
    /// Dynamically independent Lorenz 63 sites; the state is the
    /// concatenation of the per-site (x, y, z) triples.
    Ring(Vec<Lorenz63Params>),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Lorenz63(_) | Model::EhrhardMuller(_) => 3,
            Model::Ring(sites) => 3 * sites.len(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Lorenz63(_) => "lorenz63",
            Model::EhrhardMuller(_) => "ehrhard_muller",
            Model::Ring(_) => "ring",
        }
    }

    /// Right-hand side F(x).
    pub fn rhs(&self, state: &State) -> Result<State> {
        check_dim(self.dim(), state)?;
        match self {
            Model::Lorenz63(p) => lorenz63_rhs(state, p),
            Model::EhrhardMuller(p) => em_rhs(state, p),
            Model::Ring(sites) => {
                let mut out = State::zeros(self.dim());
                for (i, p) in sites.iter().enumerate() {
                    let s = state.as_slice();
                    let d = lorenz::rhs_raw(&[s[3 * i], s[3 * i + 1], s[3 * i + 2]], p);
                    out.rows_mut(3 * i, 3).copy_from_slice(&d);
                }
                Ok(out)
            }
        }
    }

    /// Analytic Jacobian dF/dx at `state`.
    pub fn jacobian(&self, state: &State) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), state)?;
        match self {
            Model::Lorenz63(p) => lorenz63_jacobian(state, p),
            Model::EhrhardMuller(p) => em_jacobian(state, p),
            Model::Ring(sites) => {
                let n = self.dim();
                let mut out = DMatrix::zeros(n, n);
                for (i, p) in sites.iter().enumerate() {
                    let s = state.as_slice();
                    let j = lorenz::jacobian_raw(&[s[3 * i], s[3 * i + 1], s[3 * i + 2]], p);
                    for r in 0..3 {
                        for c in 0..3 {
                            out[(3 * i + r, 3 * i + c)] = j[r][c];
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Jacobian of the named model at a state; column j is dF/dx_j.
pub fn jacobian(model: &Model, state: &State) -> Result<DMatrix<f64>> {
    model.jacobian(state)
}

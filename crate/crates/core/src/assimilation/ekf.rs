//! The extended Kalman filter: TLM-propagated covariance with the standard
//! gain update.

use super::{AnalysisResult, Covariance, Diagnostic, GainMatrix};
use crate::error::{Error, Result};
use crate::models::{integrate, propagate_tlm, IntegratorConfig, Model, State};
use nalgebra::{DMatrix, DVector};

/// Forecast state and covariance, with any PSD violation flagged.
#[derive(Debug, Clone)]
pub struct EkfForecast {
    pub state: State,
    pub covariance: Covariance,
    pub diagnostics: Vec<Diagnostic>,
}

/// x_f = M(x_a); P_f = L P_a L^T + Q with L the tangent linear model over
/// the window. The result is symmetrized.
pub fn ekf_forecast(
    x_a: &State,
    p_a: &Covariance,
    model: &Model,
    config: &IntegratorConfig,
    window: f64,
    q: &Covariance,
) -> Result<EkfForecast> {
    if !(window >= 0.0) {
        return Err(Error::invalid(format!("window must be nonnegative, got {window}")));
    }
    if p_a.dim() != model.dim() || q.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: p_a.dim() });
    }
    let trajectory = integrate(model, x_a, config, window)?;
    let tlm = propagate_tlm(model, x_a, config, window)?;
    let p_f = &tlm.matrix * p_a.matrix() * tlm.matrix.transpose() + q.matrix();
    let covariance = Covariance::symmetrized(&p_f);
    let mut diagnostics = Vec::new();
    if !covariance.is_psd() {
        diagnostics.push(Diagnostic::NonPsdCovariance);
    }
    Ok(EkfForecast { state: trajectory.last().clone(), covariance, diagnostics })
}

/// K = P_f H^T (R + H P_f H^T)^-1; x_a = x_f + K d; P_a = (I - K H) P_f.
pub fn ekf_analysis(
    x_f: &State,
    p_f: &Covariance,
    h: &DMatrix<f64>,
    r: &Covariance,
    y_o: &DVector<f64>,
) -> Result<AnalysisResult> {
    let n = x_f.len();
    if p_f.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p_f.dim() });
    }
    let k: GainMatrix = super::oi_gain(p_f, h, r)?;
    let innovation = y_o - h * x_f;
    let x_a = x_f + &k * &innovation;
    let p_a = (DMatrix::identity(n, n) - &k * h) * p_f.matrix();
    let covariance = Covariance::symmetrized(&p_a);
    let mut diagnostics = Vec::new();
    if !covariance.is_psd() {
        diagnostics.push(Diagnostic::NonPsdCovariance);
    }
    Ok(AnalysisResult {
        increment_norm: (&x_a - x_f).norm(),
        state: x_a,
        covariance: Some(covariance),
        ensemble: None,
        innovation,
        diagnostics,
    })
}

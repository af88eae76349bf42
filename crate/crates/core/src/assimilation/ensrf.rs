//! Ensemble square root filter: deterministic perturbation update in the
//! Potter form.

use super::{oi_gain, AnalysisResult, Covariance, Diagnostic, Ensemble};
use crate::error::{Error, Result};
use crate::linalg;
use nalgebra::{DMatrix, DVector};

/// Deterministic analysis without perturbed observations.
///
/// The mean is updated with the standard gain from the sample covariance
/// P_f = Z_f Z_f^T, Z_f = X_b / sqrt(k-1). The perturbations transform as
/// Z_a = Z_f (I - V D^-1 V^T)^(1/2) with V = (H Z_f)^T and D = V^T V + R,
/// so the analysis perturbation covariance equals (I - K H) P_f exactly.
pub fn ensrf_analysis(
    ens: &Ensemble,
    h: &DMatrix<f64>,
    r: &Covariance,
    y_o: &DVector<f64>,
) -> Result<AnalysisResult> {
    if h.ncols() != ens.dim() || h.nrows() != r.dim() || y_o.len() != r.dim() {
        return Err(Error::DimensionMismatch { expected: ens.dim(), got: h.ncols() });
    }
    let k = ens.k();
    let mut diagnostics = Vec::new();
    if ens.is_degenerate() {
        diagnostics.push(Diagnostic::DegenerateEnsemble);
    }

    let mean = ens.mean();
    let x_b = ens.perturbation_matrix();
    let z_f = &x_b / ((k - 1) as f64).sqrt();

    let p_f = Covariance::symmetrized(&(&z_f * z_f.transpose()));
    let gain = oi_gain(&p_f, h, r)?;
    let innovation = y_o - h * &mean;
    let mean_a = &mean + &gain * &innovation;

    // V: k x m, D: m x m.
    let v = (h * &z_f).transpose();
    let d = v.transpose() * &v + r.matrix();
    let d_inv_vt = linalg::solve_sym(&d, &v.transpose(), "obs-space covariance")?;
    let t_sq = DMatrix::identity(k, k) - &v * d_inv_vt;
    let t = linalg::sym_sqrt(&t_sq, "perturbation transform")?;

    let z_a = z_f * t;
    let x_a = z_a * ((k - 1) as f64).sqrt();
    let analysis = Ensemble::from_mean_and_perturbations(&mean_a, &x_a)?;

    Ok(AnalysisResult {
        increment_norm: (&mean_a - &mean).norm(),
        state: mean_a,
        covariance: None,
        ensemble: Some(analysis),
        innovation,
        diagnostics,
    })
}

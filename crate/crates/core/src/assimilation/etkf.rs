//! Ensemble transform Kalman filter: the analysis is computed in the
//! k-dimensional ensemble space via one symmetric eigendecomposition.

use super::{AnalysisResult, Covariance, Diagnostic, Ensemble};
use crate::error::{Error, Result};
use crate::linalg;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Transform the background ensemble so its spread carries the analysis
/// covariance.
///
/// With Y_b the obs-space perturbations, the ensemble-space precision is
/// (k-1) I / rho + Y_b^T R^-1 Y_b; its eigendecomposition yields both the
/// weight covariance P~_a and the symmetric square-root transform
/// W_a = ((k-1) P~_a)^(1/2). The symmetric root keeps the analysis
/// perturbations zero-mean. rho >= 1 is multiplicative spread inflation.
pub fn etkf_analysis(
    ens: &Ensemble,
    h: &DMatrix<f64>,
    r: &Covariance,
    y_o: &DVector<f64>,
    rho: f64,
) -> Result<AnalysisResult> {
    if rho < 1.0 {
        return Err(Error::invalid(format!("covariance inflation rho must be >= 1, got {rho}")));
    }
    if h.ncols() != ens.dim() || h.nrows() != r.dim() || y_o.len() != r.dim() {
        return Err(Error::DimensionMismatch { expected: ens.dim(), got: h.ncols() });
    }
    let k = ens.k();
    let m = r.dim();
    let kf = (k - 1) as f64;
    let mut diagnostics = Vec::new();
    if ens.is_degenerate() {
        diagnostics.push(Diagnostic::DegenerateEnsemble);
    }

    let mean = ens.mean();
    let x_b = ens.perturbation_matrix();

    // Map members into observation space and form the deviations.
    let y_mean = h * &mean;
    let y_b = h * &x_b;

    // C = Y_b^T R^-1, via solving R C^T = Y_b.
    let c = if m == 0 {
        DMatrix::zeros(k, 0)
    } else {
        linalg::solve_sym(r.matrix(), &y_b, "observation covariance")?.transpose()
    };
    let g = &c * &y_b; // Y_b^T R^-1 Y_b, symmetric PSD, k x k.

    let eig = SymmetricEigen::new(linalg::symmetrize(&g));
    let mut inv_vals = DVector::zeros(k);
    let mut inv_sqrt_vals = DVector::zeros(k);
    for (i, &gamma) in eig.eigenvalues.iter().enumerate() {
        let lambda = kf / rho + gamma.max(0.0);
        if lambda <= 0.0 {
            return Err(Error::Singular { context: "ensemble-space precision" });
        }
        inv_vals[i] = 1.0 / lambda;
        inv_sqrt_vals[i] = 1.0 / lambda.sqrt();
    }
    let q = &eig.eigenvectors;
    let p_tilde = q * DMatrix::from_diagonal(&inv_vals) * q.transpose();
    let w_transform = q * DMatrix::from_diagonal(&inv_sqrt_vals) * q.transpose() * kf.sqrt();

    let innovation = y_o - &y_mean;
    let w_mean = &p_tilde * (&c * &innovation);

    let mean_a = &mean + &x_b * &w_mean;
    let x_a = &x_b * &w_transform;
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

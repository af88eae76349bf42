//! 3D-Var: the variational route to the same statistical problem as OI.

use super::{AnalysisResult, Covariance};
use crate::error::{Error, Result};
use crate::linalg;
use crate::models::State;
use nalgebra::{DMatrix, DVector};

/// J(x) = (x - x_b)^T B^-1 (x - x_b) + (y_o - H(x))^T R^-1 (y_o - H(x)).
///
/// The observation operator may be nonlinear.
pub fn var3d_cost<H>(
    x: &State,
    x_b: &State,
    b: &Covariance,
    y_o: &DVector<f64>,
    h_fn: H,
    r: &Covariance,
) -> Result<f64>
where
    H: Fn(&State) -> DVector<f64>,
{
    if x.len() != x_b.len() {
        return Err(Error::DimensionMismatch { expected: x_b.len(), got: x.len() });
    }
    let dx = x - x_b;
    let b_inv_dx = linalg::solve_sym_vec(b.matrix(), &dx, "background covariance")?;
    let dy = y_o - h_fn(x);
    if dy.len() != r.dim() {
        return Err(Error::DimensionMismatch { expected: r.dim(), got: dy.len() });
    }
    let r_inv_dy = linalg::solve_sym_vec(r.matrix(), &dy, "observation covariance")?;
    Ok(dx.dot(&b_inv_dx) + dy.dot(&r_inv_dy))
}

/// Closed-form minimizer for linear H:
/// x_a = x_b + (B^-1 + H^T R^-1 H)^-1 H^T R^-1 (y_o - H x_b).
pub fn var3d_analysis(
    x_b: &State,
    b: &Covariance,
    h: &DMatrix<f64>,
    r: &Covariance,
    y_o: &DVector<f64>,
) -> Result<AnalysisResult> {
    let n = x_b.len();
    if b.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.dim() });
    }
    if h.ncols() != n || h.nrows() != r.dim() || y_o.len() != r.dim() {
        return Err(Error::DimensionMismatch { expected: r.dim(), got: h.nrows() });
    }
    let b_inv = linalg::solve_sym(b.matrix(), &DMatrix::identity(n, n), "background covariance")?;
    let r_inv_h = linalg::solve_sym(r.matrix(), h, "observation covariance")?;
    let precision = b_inv + h.transpose() * &r_inv_h;

    let innovation = y_o - h * x_b;
    let rhs = h.transpose() * linalg::solve_sym_vec(r.matrix(), &innovation, "observation covariance")?;
    let increment = linalg::solve_sym_vec(&precision, &rhs, "analysis precision")?;
    let p_a = linalg::solve_sym(&precision, &DMatrix::identity(n, n), "analysis precision")?;

    let x_a = x_b + increment;
    Ok(AnalysisResult {
        increment_norm: (&x_a - x_b).norm(),
        state: x_a,
        covariance: Some(Covariance::symmetrized(&p_a)),
        ensemble: None,
        innovation,
        diagnostics: Vec::new(),
    })
}

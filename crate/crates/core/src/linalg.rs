//! Small dense linear-algebra helpers shared by the filters.
//!
//! Inversions are always performed as solves. A system counts as singular
//! when the LU pivots fall below `SINGULARITY_TOL` relative to the matrix
//! norm.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative pivot threshold below which a solve is reported singular.
pub const SINGULARITY_TOL: f64 = 1e-12;

/// (M + Mᵀ)/2.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Max |m_ij - m_ji| relative to the matrix norm; 0 for empty matrices.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let norm = m.norm().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / norm
}

/// Solve A X = B for symmetric A, preferring Cholesky and falling back to LU.
pub fn solve_sym(a: &DMatrix<f64>, b: &DMatrix<f64>, context: &'static str) -> Result<DMatrix<f64>> {
    debug_assert_eq!(a.nrows(), a.ncols());
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    solve_lu(a, b, context)
}

/// Solve A x = b for symmetric A with a vector right-hand side.
pub fn solve_sym_vec(a: &DMatrix<f64>, b: &DVector<f64>, context: &'static str) -> Result<DVector<f64>> {
    let x = solve_sym(a, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()), context)?;
    Ok(DVector::from_column_slice(x.as_slice()))
}

/// Solve A X = B by LU with partial pivoting.
pub fn solve_lu(a: &DMatrix<f64>, b: &DMatrix<f64>, context: &'static str) -> Result<DMatrix<f64>> {
    let norm = a.norm();
    let lu = a.clone().lu();
    let min_pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |acc, d| acc.min(d.abs()));
    if !min_pivot.is_finite() || min_pivot <= SINGULARITY_TOL * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::Singular { context });
    }
    lu.solve(b).ok_or(Error::Singular { context })
}

/// Symmetric positive-semidefinite square root via eigendecomposition.
///
/// Eigenvalues slightly negative from roundoff are clamped to zero; anything
/// below `-tol * trace` is an error.
pub fn sym_sqrt(m: &DMatrix<f64>, context: &'static str) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let scale = m.trace().abs().max(1.0);
    let mut roots = eig.eigenvalues.clone();
    for v in roots.iter_mut() {
        if *v < -1e-10 * scale {
            return Err(Error::Singular { context });
        }
        *v = v.max(0.0).sqrt();
    }
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v))
}

/// True when every entry is finite.
pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

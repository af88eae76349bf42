//! Optimal interpolation: the closed-form multivariate analysis.

use super::{AnalysisResult, Covariance, GainMatrix};
use crate::error::{Error, Result};
use crate::linalg;
use crate::models::State;
use nalgebra::{DMatrix, DVector};

/// W = B H^T (R + H B H^T)^-1, computed by solving against the innovation
/// covariance rather than inverting it.
pub fn oi_gain(b: &Covariance, h: &DMatrix<f64>, r: &Covariance) -> Result<GainMatrix> {
    let n = b.dim();
    let m = r.dim();
    if h.ncols() != n || h.nrows() != m {
        return Err(Error::DimensionMismatch { expected: n, got: h.ncols() });
    }
    let bht = b.matrix() * h.transpose();
    let s = r.matrix() + h * &bht;
    // W S = B H^T, so by symmetry of S: W^T = S^-1 (B H^T)^T.
    let wt = linalg::solve_sym(&s, &bht.transpose(), "innovation covariance")?;
    Ok(wt.transpose())
}

/// x_a = x_b + W (y_o - H x_b), P_a = (I - W H) B.
pub fn oi_analysis(
    x_b: &State,
    b: &Covariance,
    h: &DMatrix<f64>,
    r: &Covariance,
    y_o: &DVector<f64>,
) -> Result<AnalysisResult> {
    if x_b.len() != b.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), got: x_b.len() });
    }
    if y_o.len() != r.dim() {
        return Err(Error::DimensionMismatch { expected: r.dim(), got: y_o.len() });
    }
    let w = oi_gain(b, h, r)?;
    let innovation = y_o - h * x_b;
    let x_a = x_b + &w * &innovation;
    let n = x_b.len();
    let p_a = (DMatrix::identity(n, n) - &w * h) * b.matrix();
    Ok(AnalysisResult {
        increment_norm: (&x_a - x_b).norm(),
        state: x_a,
        covariance: Some(Covariance::symmetrized(&p_a)),
        ensemble: None,
        innovation,
        diagnostics: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assimilation::scalar_analysis;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn identity_system_halves_weight() {
        let w = oi_gain(&Covariance::identity(3), &DMatrix::identity(3, 3), &Covariance::identity(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 0.5 } else { 0.0 };
                assert_relative_eq!(w[(i, j)], expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn scalar_reduction_matches_scalar_analysis() {
        let (var_b, var_o) = (0.9, 2.3);
        let w = oi_gain(
            &Covariance::from_diagonal(&[var_b]),
            &DMatrix::identity(1, 1),
            &Covariance::from_diagonal(&[var_o]),
        )
        .unwrap();
        let expected = var_b / (var_b + var_o);
        assert_relative_eq!(w[(0, 0)], expected, epsilon = 1e-14);

        let res = oi_analysis(
            &State::from_vec(vec![0.4]),
            &Covariance::from_diagonal(&[var_b]),
            &DMatrix::identity(1, 1),
            &Covariance::from_diagonal(&[var_o]),
            &DVector::from_vec(vec![-1.0]),
        )
        .unwrap();
        let (u_a, var_a) = scalar_analysis(0.4, var_b, -1.0, var_o).unwrap();
        assert_relative_eq!(res.state[0], u_a, epsilon = 1e-14);
        assert_relative_eq!(res.covariance.unwrap().matrix()[(0, 0)], var_a, epsilon = 1e-14);
    }

    #[test]
    fn partial_observation_hand_case() {
        // B = diag(1, 2), H = [1 0], R = [1]: W = [1/2, 0]^T.
        let w = oi_gain(
            &Covariance::from_diagonal(&[1.0, 2.0]),
            &DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            &Covariance::from_diagonal(&[1.0]),
        )
        .unwrap();
        assert_relative_eq!(w[(0, 0)], 0.5, epsilon = 1e-14);
        assert_relative_eq!(w[(1, 0)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_innovation_returns_background() {
        let x_b = State::from_vec(vec![1.0, -2.0, 0.5]);
        let h = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let y_o = &h * &x_b;
        let res = oi_analysis(&x_b, &Covariance::identity(3), &h, &Covariance::identity(2), &y_o).unwrap();
        assert_eq!(res.state, x_b);
        assert_eq!(res.increment_norm, 0.0);
    }

    #[test]
    fn perfect_observations_replace_background() {
        let x_b = State::from_vec(vec![1.0, 2.0]);
        let y_o = DVector::from_vec(vec![5.0, -3.0]);
        let res = oi_analysis(
            &x_b,
            &Covariance::identity(2),
            &DMatrix::identity(2, 2),
            &Covariance::scaled_identity(2, 1e-14),
            &y_o,
        )
        .unwrap();
        assert_relative_eq!(res.state[0], 5.0, epsilon = 1e-10);
        assert_relative_eq!(res.state[1], -3.0, epsilon = 1e-10);
        assert!(res.covariance.unwrap().matrix().norm() < 1e-10);
    }

    #[test]
    fn analysis_never_inflates_total_variance() {
        let mut rng = crate::rng::stream(21, crate::rng::Domain::Generic(3));
        for _ in 0..50 {
            let n = rng.gen_range(1..5);
            let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let b = Covariance::symmetrized(&(&a * a.transpose()));
            let rdiag: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
            let r = Covariance::from_diagonal(&rdiag);
            let x_b = State::zeros(n);
            let y_o = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let res = oi_analysis(&x_b, &b, &DMatrix::identity(n, n), &r, &y_o).unwrap();
            let p_a = res.covariance.unwrap();
            assert!(p_a.matrix().trace() <= b.matrix().trace() + 1e-12);
        }
    }

    #[test]
    fn singular_innovation_covariance_is_an_error() {
        let b = Covariance::zeros(2);
        let r = Covariance::zeros(2);
        let h = DMatrix::identity(2, 2);
        assert!(matches!(oi_gain(&b, &h, &r), Err(Error::Singular { .. })));
    }
}

//! The Lorenz 63 system.

use super::{check_dim, State};
use crate::error::Result;
use nalgebra::DMatrix;

/// Lorenz 63 parameters; the defaults give the classic butterfly attractor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorenz63Params {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for Lorenz63Params {
    fn default() -> Self {
        Lorenz63Params { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0 }
    }
}

pub(crate) fn rhs_raw(s: &[f64; 3], p: &Lorenz63Params) -> [f64; 3] {
    let (x, y, z) = (s[0], s[1], s[2]);
    [p.sigma * (y - x), p.rho * x - y - x * z, x * y - p.beta * z]
}

pub(crate) fn jacobian_raw(s: &[f64; 3], p: &Lorenz63Params) -> [[f64; 3]; 3] {
    let (x, y, z) = (s[0], s[1], s[2]);
    [
        [-p.sigma, p.sigma, 0.0],
        [p.rho - z, -1.0, -x],
        [y, x, -p.beta],
    ]
}

/// dx/dt = sigma (y - x), dy/dt = rho x - y - x z, dz/dt = x y - beta z.
pub fn lorenz63_rhs(state: &State, params: &Lorenz63Params) -> Result<State> {
    check_dim(3, state)?;
    let d = rhs_raw(&[state[0], state[1], state[2]], params);
    Ok(State::from_column_slice(&d))
}

/// Analytic Jacobian of the Lorenz 63 right-hand side.
pub fn lorenz63_jacobian(state: &State, params: &Lorenz63Params) -> Result<DMatrix<f64>> {
    check_dim(3, state)?;
    let j = jacobian_raw(&[state[0], state[1], state[2]], params);
    Ok(DMatrix::from_fn(3, 3, |r, c| j[r][c]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rhs_at_ones() {
        // (1,1,1) with defaults: (10(1-1), 28-1-1, 1-8/3) = (0, 26, -5/3).
        let d = lorenz63_rhs(&State::from_vec(vec![1.0, 1.0, 1.0]), &Lorenz63Params::default()).unwrap();
        assert_relative_eq!(d[0], 0.0);
        assert_relative_eq!(d[1], 26.0);
        assert_relative_eq!(d[2], -5.0 / 3.0);
    }

    #[test]
    fn nontrivial_fixed_point() {
        // (sqrt(beta (rho-1)), sqrt(beta (rho-1)), rho-1) = (sqrt(72), sqrt(72), 27).
        let c = 72.0f64.sqrt();
        let d = lorenz63_rhs(&State::from_vec(vec![c, c, 27.0]), &Lorenz63Params::default()).unwrap();
        for i in 0..3 {
            assert!(d[i].abs() < 1e-13, "component {i} = {}", d[i]);
        }
    }

    #[test]
    fn jacobian_at_origin() {
        let j = lorenz63_jacobian(&State::zeros(3), &Lorenz63Params::default()).unwrap();
        let expected = [
            [-10.0, 10.0, 0.0],
            [28.0, -1.0, 0.0],
            [0.0, 0.0, -8.0 / 3.0],
        ];
        for r in 0..3 {
            for c in 0..3 {
                assert_relative_eq!(j[(r, c)], expected[r][c]);
            }
        }
    }
}

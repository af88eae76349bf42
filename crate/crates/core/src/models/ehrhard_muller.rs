//! The Ehrhard-Muller reduced-order model of a thermal convection loop.
//!
//! The state is (x1, x2, x3) = (mean fluid velocity, 3-vs-9 o'clock
//! temperature difference, deviation from the conductive temperature
//! profile), all nondimensional. With `k_wall = 0` and the parameter map
//! alpha -> sigma, beta_em -> rho the system reduces to Lorenz 63 with
//! Lorenz beta = 1.

use super::{check_dim, State};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EhrhardMullerParams {
    /// Wall friction / heat transfer ratio (plays the role of Lorenz sigma).
    pub alpha: f64,
    /// Nondimensional heating (plays the role of Lorenz rho).
    pub beta_em: f64,
    /// Velocity-dependent wall friction coefficient K; zero recovers Lorenz.
    pub k_wall: f64,
}

/// Velocity-dependent friction profile.
///
/// h(x) = x^(1/3) for x >= 1 and the quartic p(x) = (44x^2 - 55x^3 + 20x^4)/9
/// below one; p(1) = 1 so the profile is continuous at the joint. Callers
/// pass |x1|; negative input is an error.
pub fn h_friction(x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::invalid(format!("h_friction requires x >= 0, got {x}")));
    }
    if x >= 1.0 {
        Ok(x.cbrt())
    } else {
        Ok((44.0 * x * x - 55.0 * x * x * x + 20.0 * x * x * x * x) / 9.0)
    }
}

/// Derivative of `h_friction`. At x = 1 exactly, the cube-root branch is
/// used; both one-sided derivatives equal 1/3 there.
pub fn h_friction_deriv(x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::invalid(format!("h_friction_deriv requires x >= 0, got {x}")));
    }
    if x >= 1.0 {
        Ok(x.powf(-2.0 / 3.0) / 3.0)
    } else {
        Ok((88.0 * x - 165.0 * x * x + 80.0 * x * x * x) / 9.0)
    }
}

/// dx1/dt = alpha (x2 - x1)
/// dx2/dt = beta x1 - x2 (1 + K h(|x1|)) - x1 x3
/// dx3/dt = x1 x2 - x3 (1 + K h(|x1|))
pub fn em_rhs(state: &State, params: &EhrhardMullerParams) -> Result<State> {
    check_dim(3, state)?;
    let (x1, x2, x3) = (state[0], state[1], state[2]);
    let damp = 1.0 + params.k_wall * h_friction(x1.abs())?;
    Ok(State::from_column_slice(&[
        params.alpha * (x2 - x1),
        params.beta_em * x1 - x2 * damp - x1 * x3,
        x1 * x2 - x3 * damp,
    ]))
}

/// Analytic Jacobian of `em_rhs`.
///
/// The chain rule through |x1| contributes sign(x1) h'(|x1|), with
/// sign(0) = 0; p'(0) = 0 keeps the Jacobian continuous at x1 = 0.
pub fn em_jacobian(state: &State, params: &EhrhardMullerParams) -> Result<DMatrix<f64>> {
    check_dim(3, state)?;
    let (x1, x2, x3) = (state[0], state[1], state[2]);
    let k = params.k_wall;
    let damp = 1.0 + k * h_friction(x1.abs())?;
    let dh = x1.signum() * h_friction_deriv(x1.abs())?;
    let dh = if x1 == 0.0 { 0.0 } else { dh };
    Ok(DMatrix::from_row_slice(3, 3, &[
        -params.alpha, params.alpha, 0.0,
        params.beta_em - x2 * k * dh - x3, -damp, -x1,
        x2 - x3 * k * dh, x1, -damp,
    ]))
}

/// Fluid and geometry constants entering the nondimensionalization.
///
/// The tabulated water values at 300 K are the defaults; the loop radius
/// and the wall coefficients `h_w0`, `f_w0` are rig-specific and default
/// to one so that callers can supply their own calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidConstants {
    /// Reference density (kg/m^3).
    pub rho_ref: f64,
    /// Specific heat (J/(kg K)).
    pub c_p: f64,
    /// Thermal expansion coefficient (1/K).
    pub beta_thermal: f64,
    /// Gravitational acceleration (m/s^2).
    pub g: f64,
    /// Loop radius R (m).
    pub loop_radius: f64,
    /// Wall heat-transfer coefficient at rest.
    pub h_w0: f64,
    /// Wall friction coefficient at rest.
    pub f_w0: f64,
}

impl Default for FluidConstants {
    fn default() -> Self {
        FluidConstants {
            rho_ref: 995.65,
            c_p: 4187.0,
            beta_thermal: 0.303e-3,
            g: 9.8,
            loop_radius: 1.0,
            h_w0: 1.0,
            f_w0: 1.0,
        }
    }
}

impl FluidConstants {
    fn check(&self) -> Result<()> {
        if self.h_w0 == 0.0 || self.f_w0 == 0.0 || self.loop_radius == 0.0
            || self.rho_ref == 0.0 || self.c_p == 0.0
        {
            return Err(Error::invalid(
                "nondimensionalization denominators (rho_ref, c_p, R, h_w0, f_w0) must be nonzero",
            ));
        }
        Ok(())
    }

    /// Velocity scale: x1 = rho_ref c_p / (R h_w0) * u.
    pub fn velocity_scale(&self) -> f64 {
        self.rho_ref * self.c_p / (self.loop_radius * self.h_w0)
    }

    /// Temperature scale: x2 = 1/2 rho_ref c_p beta g / (R h_w0 f_w0) * dT.
    pub fn temperature_scale(&self) -> f64 {
        0.5 * self.rho_ref * self.c_p * self.beta_thermal * self.g
            / (self.loop_radius * self.h_w0 * self.f_w0)
    }

    /// Model time units per second: t' = h_w0 / (rho_ref c_p) * t.
    pub fn model_time_per_second(&self) -> f64 {
        self.h_w0 / (self.rho_ref * self.c_p)
    }

    /// Forcing scale gamma = (2/pi) rho_ref c_p beta g / (R h_w0 f_w0) * dT_w.
    ///
    /// Gamma belongs to the same family of scales as x2/x3 but does not
    /// appear in the final ODEs; it is exposed for reference only.
    pub fn forcing_scale_gamma(&self, delta_t_wall: f64) -> f64 {
        (2.0 / std::f64::consts::PI) * self.rho_ref * self.c_p * self.beta_thermal * self.g
            / (self.loop_radius * self.h_w0 * self.f_w0)
            * delta_t_wall
    }
}

/// A physical loop state in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalState {
    /// Mean fluid velocity (m/s).
    pub velocity: f64,
    /// Temperature difference between the 3 and 9 o'clock positions (K).
    pub delta_t_3_9: f64,
    /// Deviation from the conductive wall profile, (4/pi) dT_w - dT_{6-12} (K).
    pub wall_profile_deviation: f64,
}

/// Map a physical loop state to the nondimensional (x1, x2, x3).
pub fn em_nondimensionalize(physical: &PhysicalState, constants: &FluidConstants) -> Result<State> {
    constants.check()?;
    Ok(State::from_column_slice(&[
        constants.velocity_scale() * physical.velocity,
        constants.temperature_scale() * physical.delta_t_3_9,
        constants.temperature_scale() * physical.wall_profile_deviation,
    ]))
}

/// Inverse of `em_nondimensionalize`.
pub fn em_dimensionalize(state: &State, constants: &FluidConstants) -> Result<PhysicalState> {
    check_dim(3, state)?;
    constants.check()?;
    Ok(PhysicalState {
        velocity: state[0] / constants.velocity_scale(),
        delta_t_3_9: state[1] / constants.temperature_scale(),
        wall_profile_deviation: state[2] / constants.temperature_scale(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{lorenz63_jacobian, lorenz63_rhs, Lorenz63Params};
    use approx::assert_relative_eq;

    #[test]
    fn friction_profile_values() {
        assert_eq!(h_friction(0.0).unwrap(), 0.0);
        assert!((h_friction(1.0).unwrap() - 1.0).abs() < 1e-12);
        assert_relative_eq!(h_friction(8.0).unwrap(), 2.0);
        assert!(h_friction(-0.1).is_err());
    }

    #[test]
    fn friction_profile_continuous_at_joint() {
        let below = h_friction(1.0 - 1e-12).unwrap();
        let above = h_friction(1.0).unwrap();
        assert!((below - above).abs() < 1e-10);
        // Both branch derivatives equal 1/3 at the joint.
        assert_relative_eq!(h_friction_deriv(1.0).unwrap(), 1.0 / 3.0);
        let p_prime = (88.0 - 165.0 + 80.0) / 9.0;
        assert_relative_eq!(p_prime, 1.0 / 3.0);
    }

    #[test]
    fn rhs_hand_evaluation() {
        // (1,1,1) with alpha=1, beta=2, K=1 and h(1)=1:
        // (0, 2 - 1*2 - 1, 1 - 1*2) = (0, -1, -1).
        let p = EhrhardMullerParams { alpha: 1.0, beta_em: 2.0, k_wall: 1.0 };
        let d = em_rhs(&State::from_vec(vec![1.0, 1.0, 1.0]), &p).unwrap();
        assert_relative_eq!(d[0], 0.0);
        assert_relative_eq!(d[1], -1.0);
        assert_relative_eq!(d[2], -1.0);
    }

    #[test]
    fn reduces_to_lorenz_with_unit_beta() {
        use rand::Rng;
        let em = EhrhardMullerParams { alpha: 10.0, beta_em: 28.0, k_wall: 0.0 };
        let lz = Lorenz63Params { sigma: 10.0, rho: 28.0, beta: 1.0 };
        let mut rng = crate::rng::stream(3, crate::rng::Domain::Generic(1));
        for _ in 0..50 {
            let x = State::from_fn(3, |_, _| rng.gen_range(-20.0..20.0));
            let a = em_rhs(&x, &em).unwrap();
            let b = lorenz63_rhs(&x, &lz).unwrap();
            assert_eq!(a, b);
            let ja = em_jacobian(&x, &em).unwrap();
            let jb = lorenz63_jacobian(&x, &lz).unwrap();
            assert_eq!(ja, jb);
        }
    }

    #[test]
    fn nondimensionalization_round_trip() {
        let constants = FluidConstants { loop_radius: 0.41, h_w0: 3.2, f_w0: 0.05, ..Default::default() };
        let phys = PhysicalState { velocity: 0.012, delta_t_3_9: 4.5, wall_profile_deviation: -1.25 };
        let x = em_nondimensionalize(&phys, &constants).unwrap();
        let back = em_dimensionalize(&x, &constants).unwrap();
        assert_relative_eq!(back.velocity, phys.velocity, max_relative = 1e-14);
        assert_relative_eq!(back.delta_t_3_9, phys.delta_t_3_9, max_relative = 1e-14);
        assert_relative_eq!(back.wall_profile_deviation, phys.wall_profile_deviation, max_relative = 1e-14);
    }

    #[test]
    fn velocity_scale_direct_substitution() {
        // With R = h_w0 = f_w0 = 1, x1 = rho_ref c_p u.
        let constants = FluidConstants::default();
        let phys = PhysicalState { velocity: 2.0e-6, delta_t_3_9: 0.0, wall_profile_deviation: 0.0 };
        let x = em_nondimensionalize(&phys, &constants).unwrap();
        assert_relative_eq!(x[0], 995.65 * 4187.0 * 2.0e-6, max_relative = 1e-14);
        assert_eq!(x[1], 0.0);
        assert_eq!(x[2], 0.0);
    }

    #[test]
    fn zero_denominator_is_an_error() {
        let constants = FluidConstants { h_w0: 0.0, ..Default::default() };
        let phys = PhysicalState { velocity: 1.0, delta_t_3_9: 1.0, wall_profile_deviation: 1.0 };
        assert!(em_nondimensionalize(&phys, &constants).is_err());
    }
}

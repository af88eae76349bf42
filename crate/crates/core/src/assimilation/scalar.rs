//! One-variable analysis: the smallest instance of the assimilation cycle.

use crate::error::{Error, Result};

/// Combine a background (u_b, var_b) with an observation (u_o, var_o).
///
/// The weight is W = var_b / (var_b + var_o) and the analysis precision is
/// the sum of the input precisions: 1/var_a = 1/var_b + 1/var_o.
pub fn scalar_analysis(u_b: f64, var_b: f64, u_o: f64, var_o: f64) -> Result<(f64, f64)> {
    if !(var_b > 0.0) || !(var_o > 0.0) {
        return Err(Error::invalid(format!(
            "variances must be positive, got var_b = {var_b}, var_o = {var_o}"
        )));
    }
    let w = var_b / (var_b + var_o);
    let u_a = u_b + w * (u_o - u_b);
    let var_a = var_b * var_o / (var_b + var_o);
    Ok((u_a, var_a))
}

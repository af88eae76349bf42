//! Local ensemble transform Kalman filter and its four-dimensional
//! extension.
//!
//! Observation-space quantities are formed globally once; each cell then
//! solves a small analysis in ensemble space using only its local
//! observations and contributes its own state rows to the global analysis.
//! Local analyses are independent and run in parallel; the gather is
//! keyed by cell id, so results are deterministic.

use super::{LocalityScheme, LoopGeometry};
use crate::assimilation::{AnalysisResult, Diagnostic, Ensemble};
use crate::error::{Error, Result};
use crate::linalg;
use crate::models::Trajectory;
use crate::observations::{materialize_operator, ObservationSet, OperatorDomain};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

/// Everything the per-cell solves share.
struct LocalProblem<'a> {
    geom: &'a LoopGeometry,
    scheme: &'a LocalityScheme,
    rho: f64,
    k: usize,
    /// Obs-space deviations, one row per observation.
    y_b: DMatrix<f64>,
    /// Innovation y_o - mean(y_b) per observation row.
    d: DVector<f64>,
    variances: Vec<f64>,
    locations: Vec<[f64; 3]>,
}

impl LocalProblem<'_> {
    /// Ensemble-space weights for one cell: mean weight vector plus the
    /// transform, combined as columns w_mean + W_a[:, i]. None when the
    /// cell has no local observations.
    fn weights_for_cell(&self, cell: usize) -> Result<Option<DMatrix<f64>>> {
        let local: Vec<usize> = (0..self.d.len())
            .filter(|&row| self.scheme.obs_is_local(self.geom, cell, &self.locations[row]))
            .collect();
        if local.is_empty() {
            return Ok(None);
        }
        let k = self.k;
        let kf = (k - 1) as f64;

        // Local vectors: restrict rows of Y_b, d, and the diagonal R.
        let mut y_loc = DMatrix::zeros(local.len(), k);
        let mut d_loc = DVector::zeros(local.len());
        for (i, &row) in local.iter().enumerate() {
            y_loc.set_row(i, &self.y_b.row(row));
            d_loc[i] = self.d[row];
        }

        // C = Y^T R^-1 for diagonal R.
        let mut c = y_loc.transpose();
        for (i, &row) in local.iter().enumerate() {
            let inv = 1.0 / self.variances[row];
            for j in 0..k {
                c[(j, i)] *= inv;
            }
        }

        let g = &c * &y_loc;
        let eig = SymmetricEigen::new(linalg::symmetrize(&g));
        let mut inv_vals = DVector::zeros(k);
        let mut inv_sqrt_vals = DVector::zeros(k);
        for (i, &gamma) in eig.eigenvalues.iter().enumerate() {
            let lambda = kf / self.rho + gamma.max(0.0);
            if lambda <= 0.0 {
                return Err(Error::Singular { context: "local ensemble-space precision" });
            }
            inv_vals[i] = 1.0 / lambda;
            inv_sqrt_vals[i] = 1.0 / lambda.sqrt();
        }
        let q = &eig.eigenvectors;
        let p_tilde = q * DMatrix::from_diagonal(&inv_vals) * q.transpose();
        let w_a = q * DMatrix::from_diagonal(&inv_sqrt_vals) * q.transpose() * kf.sqrt();
        let w_mean = &p_tilde * (&c * &d_loc);

        // Add the mean weight to every transform column.
        let mut w = w_a;
        for j in 0..k {
            let mut col = w.column_mut(j);
            col += &w_mean;
        }
        Ok(Some(w))
    }
}

fn validate_rho(rho: f64) -> Result<()> {
    if rho < 1.0 {
        return Err(Error::invalid(format!("covariance inflation rho must be >= 1, got {rho}")));
    }
    Ok(())
}

fn assemble(
    geom: &LoopGeometry,
    ens: &Ensemble,
    problem: &LocalProblem<'_>,
) -> Result<(Ensemble, Vec<Diagnostic>)> {
    let k = ens.k();
    let mean = ens.mean();
    let x_b = ens.perturbation_matrix();

    let per_cell: Vec<Option<DMatrix<f64>>> = (0..geom.n_cells())
        .into_par_iter()
        .map(|cell| problem.weights_for_cell(cell))
        .collect::<Result<Vec<_>>>()?;

    let mut diagnostics = Vec::new();
    let mut members: Vec<DVector<f64>> = ens.members().to_vec();
    for (cell, weights) in per_cell.iter().enumerate() {
        let rows = geom.state_indices(cell);
        match weights {
            None => {
                diagnostics.push(Diagnostic::NoLocalObservations { cell });
                // Background kept for this cell: members already hold it.
            }
            Some(w) => {
                // x_a(i)[rows] = mean[rows] + X_b[rows, :] w[:, i].
                let x_rows = x_b.rows(rows.start, rows.len());
                let updated = &x_rows * w;
                for i in 0..k {
                    for (offset, r) in rows.clone().enumerate() {
                        members[i][r] = mean[r] + updated[(offset, i)];
                    }
                }
            }
        }
    }
    Ok((Ensemble::new(members)?, diagnostics))
}

/// One LETKF analysis over all observations in `obs`.
///
/// The observation error covariance is taken from the per-row variances
/// (diagonal by construction); each cell uses only observations whose
/// location passes the locality scheme, and cells with none keep their
/// background values.
pub fn letkf_analysis(
    ens: &Ensemble,
    obs: &ObservationSet,
    geom: &LoopGeometry,
    scheme: &LocalityScheme,
    rho: f64,
) -> Result<AnalysisResult> {
    validate_rho(rho)?;
    if ens.dim() != geom.state_dim() {
        return Err(Error::DimensionMismatch { expected: geom.state_dim(), got: ens.dim() });
    }
    let k = ens.k();
    let domain = OperatorDomain::Geometry(geom);
    let h = obs.operator_matrix(&domain)?;

    // Steps 1-2: obs-space projections and global perturbations.
    let mean = ens.mean();
    let mut projections = DMatrix::zeros(obs.len(), k);
    for (i, member) in ens.members().iter().enumerate() {
        projections.set_column(i, &(&h * member));
    }
    let y_mean = DVector::from_fn(obs.len(), |r, _| projections.row(r).sum() / k as f64);
    let mut y_b = projections;
    for j in 0..k {
        let mut col = y_b.column_mut(j);
        col -= &y_mean;
    }
    let d = obs.values() - &y_mean;

    let problem = LocalProblem {
        geom,
        scheme,
        rho,
        k,
        y_b,
        d: d.clone(),
        variances: obs.variances(),
        locations: obs.locations(),
    };
    let (analysis, diagnostics) = assemble(geom, ens, &problem)?;

    let state = analysis.mean();
    Ok(AnalysisResult {
        increment_norm: (&state - &mean).norm(),
        state,
        covariance: None,
        ensemble: Some(analysis),
        innovation: d,
        diagnostics,
    })
}

/// 4D-LETKF: observations from within the window are stacked by projecting
/// each member's trajectory state at the observation time; the weights are
/// then applied to the perturbations at the window start, where the
/// analysis is valid.
///
/// Observation times use the trajectory clock and must land within half a
/// step of a stored stamp.
pub fn letkf4d_analysis(
    trajectories: &[Trajectory],
    obs: &ObservationSet,
    geom: &LoopGeometry,
    scheme: &LocalityScheme,
    rho: f64,
) -> Result<AnalysisResult> {
    validate_rho(rho)?;
    if trajectories.len() < 2 {
        return Err(Error::invalid("4D-LETKF needs at least two member trajectories"));
    }
    let k = trajectories.len();
    let stamps = &trajectories[0].times;
    if trajectories.iter().any(|t| t.times != *stamps) {
        return Err(Error::invalid("member trajectories must share their time stamps"));
    }
    let start = *stamps.first().ok_or_else(|| Error::invalid("empty trajectory"))?;
    let end = *stamps.last().expect("nonempty");
    let tol = if stamps.len() > 1 { (stamps[1] - stamps[0]) / 2.0 } else { 1e-9 };

    // The background ensemble at the window start.
    let ens = Ensemble::new(trajectories.iter().map(|t| t.states[0].clone()).collect())?;
    if ens.dim() != geom.state_dim() {
        return Err(Error::DimensionMismatch { expected: geom.state_dim(), got: ens.dim() });
    }

    let domain = OperatorDomain::Geometry(geom);
    let h = materialize_operator(&obs.operator, &domain)?;

    // Stack per-row projections at each observation's own time.
    let mut projections = DMatrix::zeros(obs.len(), k);
    for (row_idx, row) in obs.rows.iter().enumerate() {
        let stamp = trajectories[0]
            .nearest_stamp(row.time, tol)
            .ok_or(Error::ObsOutsideWindow { time: row.time, start, end })?;
        let h_row = h.row(row.sensor);
        for (i, traj) in trajectories.iter().enumerate() {
            projections[(row_idx, i)] = (h_row * &traj.states[stamp])[(0, 0)];
        }
    }
    let y_mean = DVector::from_fn(obs.len(), |r, _| projections.row(r).sum() / k as f64);
    let mut y_b = projections;
    for j in 0..k {
        let mut col = y_b.column_mut(j);
        col -= &y_mean;
    }
    let d = obs.values() - &y_mean;

    let problem = LocalProblem {
        geom,
        scheme,
        rho,
        k,
        y_b,
        d: d.clone(),
        variances: obs.variances(),
        locations: obs.locations(),
    };
    let (analysis, diagnostics) = assemble(geom, &ens, &problem)?;

    let mean = ens.mean();
    let state = analysis.mean();
    Ok(AnalysisResult {
        increment_norm: (&state - &mean).norm(),
        state,
        covariance: None,
        ensemble: Some(analysis),
        innovation: d,
        diagnostics,
    })
}

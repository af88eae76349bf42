//! The non-localized filter ladder: scalar analysis, optimal interpolation,
//! 3D-Var, the extended Kalman filter, and the ensemble family (EnKF,
//! EnSRF, ETKF), plus covariance inflation, hybrid blending, and the NMC
//! static background estimate.

mod ekf;
mod enkf;
mod ensemble;
mod ensrf;
mod etkf;
mod nmc;
mod oi;
mod scalar;
mod var3d;

pub use ekf::{ekf_analysis, ekf_forecast, EkfForecast};
pub use enkf::enkf_analysis;
pub use ensemble::{
    ensemble_covariance, inflate_additive_members, inflate_additive_state, CovarianceMode, Ensemble,
};
pub use ensrf::ensrf_analysis;
pub use etkf::etkf_analysis;
pub use nmc::nmc_static_b;
pub use oi::{oi_analysis, oi_gain};
pub use scalar::scalar_analysis;
pub use var3d::{var3d_analysis, var3d_cost};

use crate::error::{Error, Result};
use crate::linalg;
use crate::models::State;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Weight applied to the innovation; model-dim rows by obs-dim columns.
pub type GainMatrix = DMatrix<f64>;

/// A symmetric positive-semidefinite error covariance.
///
/// Construction through `new` enforces symmetry to 1e-10 relative and
/// eigenvalues no smaller than -1e-10 times the trace; filter internals use
/// `symmetrized`, which repairs roundoff asymmetry instead of rejecting it.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    matrix: DMatrix<f64>,
}

impl Covariance {
    pub const SYMMETRY_TOL: f64 = 1e-10;
    pub const PSD_TOL: f64 = 1e-10;

    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), got: matrix.ncols() });
        }
        if !linalg::all_finite(&matrix) {
            return Err(Error::invalid("covariance entries must be finite"));
        }
        if linalg::asymmetry(&matrix) > Self::SYMMETRY_TOL {
            return Err(Error::invalid("covariance is not symmetric"));
        }
        let sym = linalg::symmetrize(&matrix);
        let floor = -Self::PSD_TOL * sym.trace().abs().max(1.0);
        if linalg::min_eigenvalue(&sym) < floor {
            return Err(Error::invalid("covariance is not positive semidefinite"));
        }
        Ok(Covariance { matrix: sym })
    }

    /// Symmetrize and wrap without a PSD check; used for filter outputs
    /// where the caller records PSD violations as diagnostics.
    pub fn symmetrized(matrix: &DMatrix<f64>) -> Self {
        Covariance { matrix: linalg::symmetrize(matrix) }
    }

    pub fn identity(n: usize) -> Self {
        Covariance { matrix: DMatrix::identity(n, n) }
    }

    pub fn zeros(n: usize) -> Self {
        Covariance { matrix: DMatrix::zeros(n, n) }
    }

    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        Covariance { matrix: DMatrix::identity(n, n) * scale }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Covariance { matrix: DMatrix::from_diagonal(&DVector::from_column_slice(diag)) }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// True when the smallest eigenvalue is above -PSD_TOL * trace.
    pub fn is_psd(&self) -> bool {
        let floor = -Self::PSD_TOL * self.matrix.trace().abs().max(1.0);
        linalg::min_eigenvalue(&self.matrix) >= floor
    }
}

/// Multiplicative (Delta >= 0) and additive (mu >= 0) inflation settings.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InflationConfig {
    pub delta: f64,
    pub mu: f64,
}

impl InflationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid(format!("inflation delta must be >= 0, got {}", self.delta)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid(format!("inflation mu must be >= 0, got {}", self.mu)));
        }
        Ok(())
    }
}

/// Conditions worth surfacing that do not abort an analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    /// Ensemble spread collapsed to (numerically) zero.
    DegenerateEnsemble,
    /// A covariance left an operation with eigenvalues below tolerance.
    NonPsdCovariance,
    /// A local analysis had no observations; background kept for that cell.
    NoLocalObservations { cell: usize },
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::DegenerateEnsemble => write!(f, "degenerate ensemble (zero spread)"),
            Diagnostic::NonPsdCovariance => write!(f, "analysis covariance not PSD within tolerance"),
            Diagnostic::NoLocalObservations { cell } => {
                write!(f, "cell {cell} had no local observations; background kept")
            }
        }
    }
}

/// The outcome of one analysis step.
///
/// Covariance-family filters populate `covariance`; ensemble filters
/// populate `ensemble`. Exactly one of the two is present.
#[derive(Debug, Clone)]
pub struct AnalysisResult {
    pub state: State,
    pub covariance: Option<Covariance>,
    pub ensemble: Option<Ensemble>,
    /// Observation-space innovation y_o - H(x_b) at the background mean.
    pub innovation: DVector<f64>,
    /// Euclidean norm of the analysis increment x_a - x_b.
    pub increment_norm: f64,
    pub diagnostics: Vec<Diagnostic>,
}

/// (1 + Delta) C.
pub fn inflate_multiplicative(c: &Covariance, delta: f64) -> Covariance {
    Covariance { matrix: &c.matrix * (1.0 + delta) }
}

/// C + diag(mu * nu) with nu drawn uniformly from [0, 1]^n.
pub fn inflate_additive_diag<R: Rng>(c: &Covariance, mu: f64, rng: &mut R) -> Covariance {
    let mut m = c.matrix.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += mu * rng.gen::<f64>();
    }
    Covariance { matrix: m }
}

/// alpha P_f + (1 - alpha) B_static.
pub fn hybrid_blend(b_static: &Covariance, p_f: &Covariance, alpha: f64) -> Result<Covariance> {
    if b_static.dim() != p_f.dim() {
        return Err(Error::DimensionMismatch { expected: b_static.dim(), got: p_f.dim() });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("blend weight must lie in [0, 1], got {alpha}")));
    }
    Ok(Covariance { matrix: &p_f.matrix * alpha + &b_static.matrix * (1.0 - alpha) })
}

//! Estimators for the node vector: weighted least squares (closed form and
//! gradient descent), least absolute deviations, an exhaustive l0 oracle,
//! centralized LS-EM and its distributed variant.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{is_connected, pinv_laplacian, weighted_laplacian_unchecked, LaplacianPinv};
use crate::objectives::SoftLabels;
use crate::problem::Problem;

mod dist;
mod l0;
mod lae;
mod lsem;
mod wls;

pub use dist::{dist_ls_em, dist_step_bound, DistEmConfig};
pub(crate) use dist::{edge_residuals, fixed_point_residuals};
pub use l0::{l0_oracle, L0Solution, L0_MAX_EDGES};
pub use lae::{l1_objective, lae, LaeConfig, LaeMode};
pub use lsem::{ls_em, LsEmConfig};
pub use wls::{gd_wls, ls, wls, GdConfig};

/// Floor on the denominator of the relative-step stopping criterion.
pub const SC_FLOOR: f64 = 1e-30;

/// One row of an iteration trace. Columns that do not apply to an estimator
/// are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub step_norm: f64,
    pub alpha_hat: Option<f64>,
    pub beta_hat: Option<f64>,
    pub epsilon: Option<f64>,
    pub kappa: Option<usize>,
    pub nqe: Option<f64>,
}

/// Residuals of the stationarity equations at the returned iterate, each as
/// `||lhs - rhs|| / ||lhs||` in the Euclidean norm, the same convention as
/// the relative-step stopping rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResiduals {
    /// `x = L_W^+ A^T W b` with `W` built from the returned state.
    pub x_equation: f64,
    /// The weights implied by the returned state against the last weights
    /// used.
    pub weight_equation: f64,
    /// `pi` against the (projected, for LS-EM) posterior at the returned
    /// state.
    pub label_equation: f64,
    /// `|alpha - alpha_hat| / alpha` (LS-EM only).
    pub alpha_equation: Option<f64>,
    /// `|beta - beta_hat| / beta` (LS-EM only).
    pub beta_equation: Option<f64>,
}

impl FixedPointResiduals {
    pub fn max(&self) -> f64 {
        [
            Some(self.x_equation),
            Some(self.weight_equation),
            Some(self.label_equation),
            self.alpha_equation,
            self.beta_equation,
        ]
        .into_iter()
        .flatten()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub x_hat: Vec<f64>,
    pub pi: Option<SoftLabels>,
    pub alpha_hat: Option<f64>,
    pub beta_hat: Option<f64>,
    pub epsilon: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
    pub fixed_point: Option<FixedPointResiduals>,
    /// Set when a run stopped on a numerical guard rather than on its
    /// stopping criterion.
    pub diagnostics: Option<String>,
}

impl EstimateResult {
    pub(crate) fn direct(x: DVector<f64>) -> Self {
        Self {
            x_hat: x.as_slice().to_vec(),
            pi: None,
            alpha_hat: None,
            beta_hat: None,
            epsilon: None,
            iterations: 0,
            converged: true,
            trace: Vec::new(),
            fixed_point: None,
            diagnostics: None,
        }
    }

    pub fn x(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.x_hat)
    }

    pub fn nqe(&self, x_true: &[f64]) -> Result<f64> {
        crate::metrics::nqe(&self.x_hat, x_true)
    }
}

pub(crate) fn require_connected(problem: &Problem) -> Result<()> {
    if is_connected(problem.graph()) {
        Ok(())
    } else {
        Err(Error::Disconnected {
            components: problem.graph().components(),
        })
    }
}

pub(crate) fn center(x: &mut DVector<f64>) {
    let mean = x.mean();
    x.add_scalar_mut(-mean);
}

/// `A^T W b`.
pub(crate) fn weighted_rhs(problem: &Problem, w: &[f64]) -> DVector<f64> {
    let wb = DVector::from_iterator(
        w.len(),
        w.iter().zip(problem.b().iter()).map(|(a, b)| a * b),
    );
    problem.incidence().apply_transpose(&wb)
}

/// Minimum-norm weighted least-squares solution `L_W^+ A^T W b`, centered.
/// Weights must be positive; callers validate.
pub(crate) fn solve_weighted(problem: &Problem, w: &[f64]) -> (DVector<f64>, LaplacianPinv) {
    let l = weighted_laplacian_unchecked(problem.incidence(), w);
    let pinv = pinv_laplacian(&l);
    let mut x = &pinv.matrix * weighted_rhs(problem, w);
    center(&mut x);
    (x, pinv)
}

pub(crate) fn relative_step(new: &DVector<f64>, old: &DVector<f64>) -> (f64, f64) {
    let step = (new - old).norm();
    (step, step / old.norm().max(SC_FLOOR))
}

/// `||a - b|| / ||a||`, with the denominator floored like the stopping rule.
pub(crate) fn relative_residual(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let norm: f64 = a.iter().map(|x| x * x).sum();
    diff.sqrt() / norm.sqrt().max(SC_FLOOR)
}

pub(crate) fn check_tol(tol: f64, max_iter: usize) -> Result<()> {
    if !(tol > 0.0) {
        return Err(crate::error::invalid("tol", format!("{tol} must be > 0")));
    }
    if max_iter == 0 {
        return Err(crate::error::invalid("max_iter", "must be >= 1"));
    }
    Ok(())
}

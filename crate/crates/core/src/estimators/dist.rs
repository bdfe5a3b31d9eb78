use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{
    check_tol, relative_residual, relative_step, require_connected, solve_weighted, EstimateResult,
    FixedPointResiduals, TraceRow,
};
use crate::error::{invalid, Error, Result};
use crate::objectives::{
    edge_weights, objective_v_tilde_unchecked, posterior_unchecked, SoftLabels,
};
use crate::problem::Problem;

/// Fraction of the step bound used when no step is configured.
pub const DEFAULT_STEP_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistEmConfig {
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Gradient step; `None` picks `0.9` of [`dist_step_bound`].
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    1e-4
}

fn default_max_iter() -> usize {
    5000
}

impl DistEmConfig {
    pub fn new(p: f64, alpha: f64, beta: f64) -> Self {
        Self {
            p,
            alpha,
            beta,
            tau: None,
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 0.5) {
            return Err(invalid("p", format!("{} is outside (0, 1/2)", self.p)));
        }
        if !(self.alpha > 0.0 && self.alpha < self.beta && self.beta.is_finite()) {
            return Err(invalid(
                "alpha, beta",
                format!("need 0 < alpha < beta, got {}, {}", self.alpha, self.beta),
            ));
        }
        check_tol(self.tol, self.max_iter)
    }

    /// The step actually used on `problem`, after checking it against the
    /// bound.
    pub fn resolve_tau(&self, problem: &Problem) -> Result<f64> {
        let bound = dist_step_bound(problem, self.alpha);
        let tau = self.tau.unwrap_or(DEFAULT_STEP_FRACTION * bound);
        if !(tau > 0.0 && tau < bound) {
            return Err(Error::StepSize {
                tau,
                bound,
                rule: "0 < tau < min(alpha, alpha^2) / ||A||^2",
            });
        }
        Ok(tau)
    }
}

/// Largest admissible step, `min(alpha, alpha^2) / ||A||^2`. With `pi = 0`
/// the Laplacian has norm `||A||^2 / alpha^2`, so steps beyond
/// `alpha^2 / ||A||^2` can make the gradient iteration expansive.
pub fn dist_step_bound(problem: &Problem, alpha: f64) -> f64 {
    let a2 = problem.incidence().spectral_norm().powi(2);
    alpha.min(alpha * alpha) / a2
}

/// Residuals `b_e - (x_plus - x_minus)` in edge order.
pub(crate) fn edge_residuals(problem: &Problem, x: &DVector<f64>) -> Vec<f64> {
    problem
        .graph()
        .edges()
        .iter()
        .zip(problem.b().iter())
        .map(|(e, &b)| b - (x[e.plus] - x[e.minus]))
        .collect()
}

/// Distributed LS-EM in matrix form: one gradient step on the weighted
/// residual per iteration, followed by the posterior labels, with the noise
/// scales held fixed.
pub fn dist_ls_em(problem: &Problem, config: &DistEmConfig) -> Result<EstimateResult> {
    config.validate()?;
    require_connected(problem)?;
    let tau = config.resolve_tau(problem)?;
    let (alpha, beta, p) = (config.alpha, config.beta, config.p);
    let n = problem.n_nodes();
    let m = problem.n_edges();
    let edges = problem.graph().edges();
    let v = |x: &DVector<f64>, pi: &[f64]| {
        objective_v_tilde_unchecked(problem, x, pi, alpha, beta, 0.0, p)
    };

    let mut x = DVector::zeros(n);
    let mut pi = vec![0.0; m];
    let mut trace = vec![TraceRow {
        iter: 0,
        objective: v(&x, &pi),
        step_norm: 0.0,
        alpha_hat: None,
        beta_hat: None,
        epsilon: None,
        kappa: None,
        nqe: problem.nqe_of(&x),
    }];
    let mut last_w = edge_weights(&pi, alpha, beta);
    let mut converged = false;
    let mut t = 0;
    while t < config.max_iter {
        let w = edge_weights(&pi, alpha, beta);
        let r = edge_residuals(problem, &x);
        // A^T W r, accumulated per node in edge order
        let mut g = vec![0.0; n];
        for (k, e) in edges.iter().enumerate() {
            let f = w[k] * r[k];
            g[e.plus] += f;
            g[e.minus] -= f;
        }
        let next = DVector::from_iterator(n, x.iter().zip(&g).map(|(xv, gv)| xv + tau * gv));
        let (step, sc) = relative_step(&next, &x);
        x = next;
        pi = edge_residuals(problem, &x)
            .into_iter()
            .map(|r| posterior_unchecked(r, alpha, beta, p))
            .collect();
        last_w = w;
        t += 1;
        trace.push(TraceRow {
            iter: t,
            objective: v(&x, &pi),
            step_norm: step,
            alpha_hat: None,
            beta_hat: None,
            epsilon: None,
            kappa: None,
            nqe: problem.nqe_of(&x),
        });
        if sc < config.tol {
            converged = true;
            break;
        }
    }
    let fixed_point = fixed_point_residuals(problem, &x, &pi, &last_w, config);
    Ok(EstimateResult {
        x_hat: x.as_slice().to_vec(),
        pi: Some(SoftLabels::new(pi)?),
        alpha_hat: Some(alpha),
        beta_hat: Some(beta),
        epsilon: None,
        iterations: t,
        converged,
        trace,
        fixed_point: Some(fixed_point),
        diagnostics: None,
    })
}

/// Stationarity residuals of `(x, pi)` for the fixed-scale iteration.
pub(crate) fn fixed_point_residuals(
    problem: &Problem,
    x: &DVector<f64>,
    pi: &[f64],
    last_w: &[f64],
    config: &DistEmConfig,
) -> FixedPointResiduals {
    let w = edge_weights(pi, config.alpha, config.beta);
    let (x_star, _) = solve_weighted(problem, &w);
    let pi_star: Vec<f64> = edge_residuals(problem, x)
        .into_iter()
        .map(|r| posterior_unchecked(r, config.alpha, config.beta, config.p))
        .collect();
    FixedPointResiduals {
        x_equation: relative_residual(x.as_slice(), x_star.as_slice()),
        weight_equation: relative_residual(&w, last_w),
        label_equation: relative_residual(pi, &pi_star),
        alpha_equation: None,
        beta_equation: None,
    }
}

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{
    center, check_tol, relative_step, require_connected, solve_weighted, weighted_rhs,
    EstimateResult, TraceRow,
};
use crate::error::{check_len, invalid, Error, Result};
use crate::graph::{spectral_norm, weighted_laplacian};
use crate::problem::Problem;

fn check_weights(problem: &Problem, w: &[f64]) -> Result<()> {
    check_len("w", w.len(), problem.n_edges())?;
    if let Some(bad) = w.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(invalid(
            "w",
            format!("weights must be positive and finite, got {bad}"),
        ));
    }
    Ok(())
}

/// Closed-form weighted least squares `L_W^+ A^T W b`.
pub fn wls(problem: &Problem, w: &[f64]) -> Result<EstimateResult> {
    check_weights(problem, w)?;
    require_connected(problem)?;
    let (x, _) = solve_weighted(problem, w);
    Ok(EstimateResult::direct(x))
}

/// Unweighted least squares.
pub fn ls(problem: &Problem) -> Result<EstimateResult> {
    wls(problem, &vec![1.0; problem.n_edges()])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub tau: f64,
    pub tol: f64,
    pub max_iter: usize,
}

/// Gradient descent on the weighted squared residual from `x = 0`:
/// `x <- (I - tau L_W) x + tau A^T W b`.
pub fn gd_wls(problem: &Problem, w: &[f64], config: &GdConfig) -> Result<EstimateResult> {
    check_weights(problem, w)?;
    check_tol(config.tol, config.max_iter)?;
    require_connected(problem)?;
    let l = weighted_laplacian(problem.incidence(), w)?;
    let bound = 2.0 / spectral_norm(l.as_matrix());
    if !(config.tau > 0.0 && config.tau < bound) {
        return Err(Error::StepSize {
            tau: config.tau,
            bound,
            rule: "0 < tau < 2 / ||L_W||",
        });
    }
    let rhs = weighted_rhs(problem, w);
    let objective = |x: &DVector<f64>| {
        let r = problem.residual(x);
        0.5 * r.iter().zip(w).map(|(r, w)| w * r * r).sum::<f64>()
    };

    let mut x = DVector::zeros(problem.n_nodes());
    let mut trace = vec![TraceRow {
        iter: 0,
        objective: objective(&x),
        step_norm: 0.0,
        alpha_hat: None,
        beta_hat: None,
        epsilon: None,
        kappa: None,
        nqe: problem.nqe_of(&x),
    }];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        let grad = l.as_matrix() * &x - &rhs;
        let next = &x - grad * config.tau;
        let (step, sc) = relative_step(&next, &x);
        x = next;
        iterations += 1;
        trace.push(TraceRow {
            iter: iterations,
            objective: objective(&x),
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
    center(&mut x);
    let mut out = EstimateResult::direct(x);
    out.iterations = iterations;
    out.converged = converged;
    out.trace = trace;
    Ok(out)
}

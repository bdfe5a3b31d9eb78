use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{
    check_tol, relative_residual, relative_step, require_connected, solve_weighted, EstimateResult,
    FixedPointResiduals, TraceRow,
};
use crate::error::{invalid, Result};
use crate::objectives::{
    edge_weights, objective_v_tilde_unchecked, posteriors, project_smallest_vec, SoftLabels,
};
use crate::problem::Problem;

/// Runs with `beta_hat` above this are abandoned as diverging.
pub const BETA_BLOWUP: f64 = 1e8;
/// Runs whose label mass falls below this are abandoned.
pub const PI_MASS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LsEmConfig {
    pub p: f64,
    /// Number of labels forced to zero each iteration; `None` means `N - 1`.
    pub s: Option<usize>,
    pub c1: f64,
    pub c2: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LsEmConfig {
    fn default() -> Self {
        Self {
            p: 0.1,
            s: None,
            c1: 1.0,
            c2: 1.0,
            alpha0: 0.3,
            beta0: 0.6,
            tol: 1e-4,
            max_iter: 500,
        }
    }
}

impl LsEmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 0.5) {
            return Err(invalid("p", format!("{} is outside (0, 1/2)", self.p)));
        }
        if self.s == Some(0) {
            return Err(invalid("s", "must be >= 1"));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(invalid("c1, c2", "must be positive"));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 < self.beta0 && self.beta0.is_finite()) {
            return Err(invalid(
                "alpha0, beta0",
                format!(
                    "need 0 < alpha0 < beta0, got {}, {}",
                    self.alpha0, self.beta0
                ),
            ));
        }
        check_tol(self.tol, self.max_iter)
    }

    pub fn resolved_s(&self, n_nodes: usize) -> usize {
        self.s.unwrap_or(n_nodes.saturating_sub(1).max(1))
    }
}

struct State {
    x: DVector<f64>,
    pi: Vec<f64>,
    alpha: f64,
    beta: f64,
    eps: f64,
}

/// Splits `sum (1 - pi) r^2`, `sum pi r^2`, `||1 - pi||_1` and `||pi||_1`.
fn moments(residual: &DVector<f64>, pi: &[f64]) -> (f64, f64, f64, f64) {
    let mut out = (0.0, 0.0, 0.0, 0.0);
    for (&r, &q) in residual.iter().zip(pi) {
        out.0 += (1.0 - q) * r * r;
        out.1 += q * r * r;
        out.2 += 1.0 - q;
        out.3 += q;
    }
    out
}

/// Centralized LS-EM: alternate a WLS solve, posterior evaluation with
/// projection, and re-estimation of the two noise scales, with a vanishing
/// regularization `epsilon` on the scale estimates.
pub fn ls_em(problem: &Problem, config: &LsEmConfig) -> Result<EstimateResult> {
    config.validate()?;
    require_connected(problem)?;
    let m = problem.n_edges();
    let s = config.resolved_s(problem.n_nodes());
    if s > m {
        return Err(invalid("s", format!("{s} exceeds the edge count {m}")));
    }
    let p = config.p;
    let vt = |st: &State| {
        objective_v_tilde_unchecked(problem, &st.x, &st.pi, st.alpha, st.beta, st.eps, p)
    };

    let mut st = State {
        x: DVector::zeros(problem.n_nodes()),
        pi: vec![0.0; m],
        alpha: config.alpha0,
        beta: config.beta0,
        eps: 1.0,
    };
    let mut trace = vec![TraceRow {
        iter: 0,
        objective: vt(&st),
        step_norm: 0.0,
        alpha_hat: Some(st.alpha),
        beta_hat: Some(st.beta),
        epsilon: Some(st.eps),
        kappa: None,
        nqe: problem.nqe_of(&st.x),
    }];
    let mut last_w = edge_weights(&st.pi, st.alpha, st.beta);
    let mut converged = false;
    let mut diagnostics = None;
    let mut t = 0;
    while t < config.max_iter {
        let w = edge_weights(&st.pi, st.alpha, st.beta);
        let (x, pinv) = solve_weighted(problem, &w);
        let r = problem.residual(&x);
        let xi = posteriors(&r, st.alpha, st.beta, p);
        let pi = project_smallest_vec(&xi, s);
        let kappa = pinv.kernel_dim;
        let (step, sc) = relative_step(&x, &st.x);
        let theta = if t == 0 {
            f64::INFINITY
        } else {
            1.0 / ((t + 1) as f64).ln()
        } + config.c1 * step
            + config.c2 * (kappa as f64 - 1.0);
        let eps_next = st.eps.min(theta);
        let (good_sq, bad_sq, good_mass, bad_mass) = moments(&r, &pi);
        let alpha = ((st.eps + good_sq) / good_mass).sqrt();
        let beta = ((st.eps + bad_sq) / bad_mass).sqrt();
        t += 1;
        last_w = w;
        st = State {
            x,
            pi,
            alpha,
            beta,
            eps: eps_next,
        };
        trace.push(TraceRow {
            iter: t,
            objective: vt(&st),
            step_norm: step,
            alpha_hat: Some(alpha),
            beta_hat: Some(beta),
            epsilon: Some(eps_next),
            kappa: Some(kappa),
            nqe: problem.nqe_of(&st.x),
        });
        if bad_mass < PI_MASS_FLOOR || !(beta <= BETA_BLOWUP) || !alpha.is_finite() {
            diagnostics = Some(format!(
                "stopped at iteration {t}: beta_hat = {beta:e}, ||pi||_1 = {bad_mass:e}"
            ));
            break;
        }
        if sc < config.tol {
            converged = true;
            break;
        }
    }

    let fixed_point =
        (diagnostics.is_none() && t > 0).then(|| residuals(problem, &st, &last_w, s, p));
    Ok(EstimateResult {
        x_hat: st.x.as_slice().to_vec(),
        pi: Some(SoftLabels::new(st.pi).unwrap_or_else(|_| SoftLabels::zeros(m))),
        alpha_hat: Some(st.alpha),
        beta_hat: Some(st.beta),
        epsilon: Some(st.eps),
        iterations: t,
        converged,
        trace,
        fixed_point,
        diagnostics,
    })
}

fn residuals(
    problem: &Problem,
    st: &State,
    last_w: &[f64],
    s: usize,
    p: f64,
) -> FixedPointResiduals {
    let w = edge_weights(&st.pi, st.alpha, st.beta);
    let (x_star, _) = solve_weighted(problem, &w);
    let r = problem.residual(&st.x);
    let pi_star = project_smallest_vec(&posteriors(&r, st.alpha, st.beta, p), s);
    let (good_sq, bad_sq, good_mass, bad_mass) = moments(&r, &st.pi);
    let alpha_star = ((st.eps + good_sq) / good_mass).sqrt();
    let beta_star = ((st.eps + bad_sq) / bad_mass).sqrt();
    FixedPointResiduals {
        x_equation: relative_residual(st.x.as_slice(), x_star.as_slice()),
        weight_equation: relative_residual(&w, last_w),
        label_equation: relative_residual(&st.pi, &pi_star),
        alpha_equation: Some((st.alpha - alpha_star).abs() / st.alpha),
        beta_equation: Some((st.beta - beta_star).abs() / st.beta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(LsEmConfig::default().validate().is_ok());
        let bad = [
            LsEmConfig {
                p: 0.5,
                ..Default::default()
            },
            LsEmConfig {
                s: Some(0),
                ..Default::default()
            },
            LsEmConfig {
                c1: 0.0,
                ..Default::default()
            },
            LsEmConfig {
                alpha0: 0.6,
                beta0: 0.3,
                ..Default::default()
            },
            LsEmConfig {
                tol: 0.0,
                ..Default::default()
            },
            LsEmConfig {
                max_iter: 0,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn epsilon_is_untouched_by_the_first_step() {
        let p = crate::example1::problem();
        let cfg = LsEmConfig {
            s: Some(4),
            max_iter: 1,
            ..Default::default()
        };
        let r = ls_em(&p, &cfg).unwrap();
        assert_eq!(r.trace[1].epsilon, Some(1.0));
        assert_eq!(r.iterations, 1);
        assert!(!r.converged);
    }

    #[test]
    fn tree_without_spare_edges_is_flagged() {
        // s = N - 1 = |E| zeroes every label, so beta cannot be estimated
        let g = crate::graph::Graph::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
        let p = Problem::new(g, DVector::from_vec(vec![1.0, 2.0])).unwrap();
        let r = ls_em(&p, &LsEmConfig::default()).unwrap();
        assert!(!r.converged);
        assert!(r.diagnostics.is_some());
        assert!(r.x_hat.iter().all(|v| v.is_finite()));
    }
}

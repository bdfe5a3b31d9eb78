use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{
    center, check_tol, relative_step, require_connected, solve_weighted, EstimateResult, TraceRow,
};
use crate::error::{invalid, Result};
use crate::problem::Problem;

/// `||b - A x||_1`.
pub fn l1_objective(problem: &Problem, x: &DVector<f64>) -> f64 {
    problem.residual(x).iter().map(|r| r.abs()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LaeMode {
    /// Reweighted least squares with weights `1 / max(|r_e|, delta)`,
    /// started from the unweighted solution.
    Irls { delta: f64 },
    /// `x <- x + tau_t A^T sgn(b - A x)` from `x = 0` with
    /// `tau_t = step0 / (t + 1)^decay`.
    Subgradient { step0: f64, decay: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaeConfig {
    pub mode: LaeMode,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LaeConfig {
    fn default() -> Self {
        Self {
            mode: LaeMode::Irls { delta: 1e-8 },
            tol: 1e-8,
            max_iter: 1000,
        }
    }
}

impl LaeConfig {
    pub fn subgradient(step0: f64, decay: f64, max_iter: usize) -> Self {
        Self {
            mode: LaeMode::Subgradient { step0, decay },
            tol: f64::MIN_POSITIVE,
            max_iter,
        }
    }
}

fn row(iter: usize, objective: f64, step_norm: f64, nqe: Option<f64>) -> TraceRow {
    TraceRow {
        iter,
        objective,
        step_norm,
        alpha_hat: None,
        beta_hat: None,
        epsilon: None,
        kappa: None,
        nqe,
    }
}

/// Least absolute deviations estimate, minimizing `||b - A x||_1` over
/// mean-zero `x`.
///
/// The subgradient mode never stops early; it returns the iterate with the
/// lowest objective while the trace follows the raw iterates.
pub fn lae(problem: &Problem, config: &LaeConfig) -> Result<EstimateResult> {
    check_tol(config.tol, config.max_iter)?;
    require_connected(problem)?;
    match config.mode {
        LaeMode::Irls { delta } => {
            if !(delta > 0.0) {
                return Err(invalid("delta", format!("{delta} must be > 0")));
            }
            irls(problem, delta, config.tol, config.max_iter)
        }
        LaeMode::Subgradient { step0, decay } => {
            if !(step0 > 0.0 && step0.is_finite()) {
                return Err(invalid("step0", format!("{step0} must be positive")));
            }
            if !(0.0..=1.0).contains(&decay) {
                return Err(invalid("decay", format!("{decay} is outside [0, 1]")));
            }
            Ok(subgradient(problem, step0, decay, config.max_iter))
        }
    }
}

fn irls(problem: &Problem, delta: f64, tol: f64, max_iter: usize) -> Result<EstimateResult> {
    let (mut x, _) = solve_weighted(problem, &vec![1.0; problem.n_edges()]);
    let mut trace = vec![row(0, l1_objective(problem, &x), 0.0, problem.nqe_of(&x))];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        let w: Vec<f64> = problem
            .residual(&x)
            .iter()
            .map(|r| 1.0 / r.abs().max(delta))
            .collect();
        let (next, _) = solve_weighted(problem, &w);
        let (step, sc) = relative_step(&next, &x);
        x = next;
        iterations += 1;
        trace.push(row(
            iterations,
            l1_objective(problem, &x),
            step,
            problem.nqe_of(&x),
        ));
        if sc < tol {
            converged = true;
            break;
        }
    }
    let mut out = EstimateResult::direct(x);
    out.iterations = iterations;
    out.converged = converged;
    out.trace = trace;
    Ok(out)
}

fn subgradient(problem: &Problem, step0: f64, decay: f64, max_iter: usize) -> EstimateResult {
    let a = problem.incidence();
    let mut x = DVector::zeros(problem.n_nodes());
    let mut best = (l1_objective(problem, &x), x.clone());
    let mut trace = vec![row(0, best.0, 0.0, problem.nqe_of(&x))];
    for t in 0..max_iter {
        let tau = step0 / ((t + 1) as f64).powf(decay);
        let sgn = problem.residual(&x).map(|r| {
            if r > 0.0 {
                1.0
            } else if r < 0.0 {
                -1.0
            } else {
                0.0
            }
        });
        let step = a.apply_transpose(&sgn) * tau;
        x += &step;
        let f = l1_objective(problem, &x);
        if f < best.0 {
            best = (f, x.clone());
        }
        trace.push(row(t + 1, f, step.norm(), problem.nqe_of(&x)));
    }
    let mut x = best.1;
    center(&mut x);
    let mut out = EstimateResult::direct(x);
    out.iterations = max_iter;
    // no stopping rule: the run always uses its full budget
    out.converged = true;
    out.trace = trace;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    #[test]
    fn single_edge_is_fit_exactly() {
        let g = Graph::from_pairs(2, &[(0, 1)]).unwrap();
        let p = Problem::new(g, DVector::from_vec(vec![4.0])).unwrap();
        let r = lae(&p, &LaeConfig::default()).unwrap();
        assert!((r.x_hat[1] - r.x_hat[0] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_modes() {
        let p = crate::example1::problem();
        for mode in [
            LaeMode::Irls { delta: 0.0 },
            LaeMode::Subgradient {
                step0: -1.0,
                decay: 0.5,
            },
            LaeMode::Subgradient {
                step0: 0.1,
                decay: 1.5,
            },
        ] {
            let cfg = LaeConfig {
                mode,
                tol: 1e-6,
                max_iter: 10,
            };
            assert!(lae(&p, &cfg).is_err());
        }
    }

    #[test]
    fn subgradient_trace_has_every_iterate() {
        let p = crate::example1::problem();
        let r = lae(&p, &LaeConfig::subgradient(0.05, 0.5, 30)).unwrap();
        assert_eq!(r.trace.len(), 31);
        assert_eq!(r.iterations, 30);
        let best = r
            .trace
            .iter()
            .map(|t| t.objective)
            .fold(f64::INFINITY, f64::min);
        assert!((l1_objective(&p, &r.x()) - best).abs() < 1e-12);
    }
}

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::center;
use crate::error::{invalid, Error, Result};
use crate::problem::Problem;

/// Largest edge count accepted by the exhaustive search.
pub const L0_MAX_EDGES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L0Solution {
    pub x: Vec<f64>,
    pub z: Vec<u8>,
}

impl L0Solution {
    pub fn support(&self) -> usize {
        self.z.iter().filter(|&&v| v == 1).count()
    }
}

/// Half-width of the admissible residual interval on an edge.
pub(crate) fn band(alpha: f64, beta: f64, z: u8) -> f64 {
    3.0 * alpha + 3.0 * f64::from(z) * (beta - alpha)
}

/// Sparsest labelling `z` for which some `x` satisfies
/// `|b_e - (A x)_e| <= 3 alpha + 3 z_e (beta - alpha)` on every edge.
///
/// Labellings are enumerated by support size, then lexicographically by edge
/// index, so the first feasible one has minimal support.
pub fn l0_oracle(problem: &Problem, alpha: f64, beta: f64) -> Result<L0Solution> {
    let m = problem.n_edges();
    if m > L0_MAX_EDGES {
        return Err(Error::TooLarge {
            edges: m,
            limit: L0_MAX_EDGES,
        });
    }
    if !(alpha > 0.0 && beta >= alpha && beta.is_finite()) {
        return Err(invalid(
            "alpha, beta",
            format!("need 0 < alpha <= beta, got {alpha}, {beta}"),
        ));
    }
    for k in 0..=m {
        let mut chosen: Vec<usize> = (0..k).collect();
        loop {
            let mut z = vec![0u8; m];
            for &i in &chosen {
                z[i] = 1;
            }
            if let Some(mut x) = feasible_point(problem, alpha, beta, &z) {
                center(&mut x);
                return Ok(L0Solution {
                    x: x.as_slice().to_vec(),
                    z,
                });
            }
            if !next_combination(&mut chosen, m) {
                break;
            }
        }
    }
    Err(Error::Infeasible)
}

fn next_combination(c: &mut [usize], m: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < m - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Solves the difference-constraint system with Bellman-Ford from a virtual
/// source; `None` on a negative cycle.
fn feasible_point(problem: &Problem, alpha: f64, beta: f64, z: &[u8]) -> Option<DVector<f64>> {
    let n = problem.n_nodes();
    // arc (from, to, w) encodes x_to - x_from <= w
    let mut arcs = Vec::with_capacity(2 * z.len());
    for ((e, &b), &ze) in problem
        .graph()
        .edges()
        .iter()
        .zip(problem.b().iter())
        .zip(z)
    {
        let c = band(alpha, beta, ze);
        arcs.push((e.minus, e.plus, b + c));
        arcs.push((e.plus, e.minus, c - b));
    }
    let mut dist = vec![0.0_f64; n];
    for _ in 0..n {
        let mut changed = false;
        for &(from, to, w) in &arcs {
            if dist[from] + w < dist[to] {
                dist[to] = dist[from] + w;
                changed = true;
            }
        }
        if !changed {
            return Some(DVector::from_vec(dist));
        }
    }
    None
}

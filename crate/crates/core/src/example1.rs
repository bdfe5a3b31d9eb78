//! The five-node worked example: a small network with two unreliable edges.

use nalgebra::DVector;

use crate::graph::Graph;
use crate::noise::{MeasurementSet, MixtureNoise, NoiseModel};
use crate::problem::Problem;

/// Edges as `(minus, plus)` pairs, 0-based.
pub const EDGES: [(usize, usize); 6] = [(1, 0), (4, 0), (2, 1), (4, 1), (3, 2), (4, 3)];
pub const X_TRUE: [f64; 5] = [0.737, 0.088, 0.410, 0.125, -1.362];
pub const Z_TRUE: [u8; 6] = [0, 0, 0, 0, 1, 1];
pub const B: [f64; 6] = [0.658, 2.105, -0.322, 1.450, -0.094, 1.190];
pub const ALPHA: f64 = 0.1;
pub const BETA: f64 = 1.0;
/// Mixing probability used when an estimator needs one.
pub const P: f64 = 0.1;

pub const WLS_ESTIMATE: [f64; 5] = [0.737, 0.078, 0.397, 0.156, -1.368];
pub const LS_ESTIMATE: [f64; 5] = [0.803, 0.084, 0.222, 0.132, -1.242];
pub const LAE_ESTIMATE: [f64; 5] = [0.803, 0.144, 0.242, 0.112, -1.302];
pub const WLS_NQE_RATIO: f64 = 4.89e-4;
pub const LS_NQE_RATIO: f64 = 2.09e-2;
pub const LAE_NQE_RATIO: f64 = 1.52e-2;

pub fn graph() -> Graph {
    Graph::from_pairs(5, &EDGES).expect("static example graph is valid")
}

/// The instance with its ground truth attached.
pub fn problem() -> Problem {
    Problem::new(graph(), DVector::from_column_slice(&B))
        .and_then(|p| p.with_truth(DVector::from_column_slice(&X_TRUE)))
        .expect("static example data is consistent")
}

/// True inverse variances, `1/alpha^2` on good edges and `1/beta^2` on bad.
pub fn true_weights() -> Vec<f64> {
    Z_TRUE
        .iter()
        .map(|&z| {
            if z == 1 {
                1.0 / (BETA * BETA)
            } else {
                1.0 / (ALPHA * ALPHA)
            }
        })
        .collect()
}

pub fn measurement_set() -> MeasurementSet {
    MeasurementSet {
        graph: graph(),
        b: B.to_vec(),
        x_true: Some(X_TRUE.to_vec()),
        z_true: Some(Z_TRUE.to_vec()),
        noise: Some(NoiseModel::Mixture(MixtureNoise {
            alpha: ALPHA,
            beta: BETA,
            p: P,
        })),
        seed: None,
    }
}

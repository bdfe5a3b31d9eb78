//! Synthetic data: ground-truth states, Erdos-Renyi topologies and noisy
//! relative measurements.
//!
//! Every generator is a pure function of its inputs and a `u64` seed. A seed
//! drives a ChaCha8 generator split into fixed, independent streams (graph,
//! state, labels, noise), so one trial seed reproduces the whole instance and
//! changing one parameter leaves the other streams untouched.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::graph::{incidence_matrix, is_connected, Edge, Graph};
use crate::problem::Problem;

/// Maximum number of Erdos-Renyi draws before giving up on connectivity.
pub const ER_MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Graph = 0,
    State = 1,
    Labels = 2,
    Noise = 3,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Deterministic child seed (splitmix64 finalizer over `root` and `index`).
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Two-component Gaussian mixture: std `alpha` with probability `1 - p`,
/// std `beta` with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureNoise {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
}

impl MixtureNoise {
    pub fn new(alpha: f64, beta: f64, p: f64) -> Result<Self> {
        let m = Self { alpha, beta, p };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(invalid("alpha", format!("{} must be > 0", self.alpha)));
        }
        // beta == alpha is accepted: the mixture then collapses to one Gaussian
        if !(self.beta >= self.alpha) || !self.beta.is_finite() {
            return Err(invalid(
                "beta",
                format!("{} must be >= alpha = {}", self.beta, self.alpha),
            ));
        }
        if !(self.p > 0.0 && self.p < 0.5) {
            return Err(invalid("p", format!("{} must lie in (0, 1/2)", self.p)));
        }
        Ok(())
    }

    /// Variance of one noise draw, `(1 - p) alpha^2 + p beta^2`.
    pub fn variance(&self) -> f64 {
        (1.0 - self.p) * self.alpha * self.alpha + self.p * self.beta * self.beta
    }
}

/// Outlier model: Gaussian noise of std `alpha` on good edges, uniform
/// `[-delta/4, delta/4]` errors on outlier edges chosen with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MismatchNoise {
    pub alpha: f64,
    pub p: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_delta() -> f64 {
    2.0
}

impl MismatchNoise {
    pub fn new(alpha: f64, p: f64, delta: f64) -> Result<Self> {
        let m = Self { alpha, p, delta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(invalid("alpha", format!("{} must be >= 0", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(invalid("p", format!("{} must lie in [0, 1]", self.p)));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(invalid("delta", format!("{} must be > 0", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    Mixture(MixtureNoise),
    Mismatch(MismatchNoise),
}

/// Measurements on a graph, plus the ground truth when they are synthetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub graph: Graph,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_true: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_true: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl MeasurementSet {
    pub fn validate(&self) -> Result<()> {
        check_len("b", self.b.len(), self.graph.n_edges())?;
        if let Some(x) = &self.x_true {
            check_len("x_true", x.len(), self.graph.n_nodes())?;
        }
        if let Some(z) = &self.z_true {
            check_len("z_true", z.len(), self.graph.n_edges())?;
            if z.iter().any(|&v| v > 1) {
                return Err(invalid("z_true", "labels must be 0 or 1"));
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<Problem> {
        let p = Problem::new(self.graph.clone(), DVector::from_column_slice(&self.b))?;
        match &self.x_true {
            Some(x) => p.with_truth(DVector::from_column_slice(x)),
            None => Ok(p),
        }
    }

    /// Edge weights `1 / sigma_e^2` from the true labels (mixture noise only).
    pub fn true_weights(&self) -> Option<Vec<f64>> {
        let z = self.z_true.as_ref()?;
        match self.noise? {
            NoiseModel::Mixture(m) => Some(
                z.iter()
                    .map(|&zi| {
                        let s = if zi == 1 { m.beta } else { m.alpha };
                        1.0 / (s * s)
                    })
                    .collect(),
            ),
            NoiseModel::Mismatch(_) => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }
}

fn center(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

/// `n` i.i.d. uniform(0, 1) entries, mean-centered.
pub fn generate_state(n: usize, seed: u64) -> Result<Vec<f64>> {
    generate_state_in(n, 0.0, 1.0, seed)
}

/// `n` i.i.d. uniform(lo, hi) entries, mean-centered.
pub fn generate_state_in(n: usize, lo: f64, hi: f64, seed: u64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(invalid("n", format!("{n} must be >= 2")));
    }
    if !(hi > lo) {
        return Err(invalid("hi", "state interval must have hi > lo"));
    }
    let mut rng = stream_rng(seed, Stream::State);
    let mut x: Vec<f64> = (0..n)
        .map(|_| lo + (hi - lo) * rng.random::<f64>())
        .collect();
    center(&mut x);
    Ok(x)
}

/// Erdos-Renyi graph conditioned on connectivity by wholesale resampling.
/// Returns the graph and the number of draws it took.
pub fn generate_er_graph_counted(n: usize, p_edge: f64, seed: u64) -> Result<(Graph, usize)> {
    if n < 2 {
        return Err(invalid("n", format!("{n} must be >= 2")));
    }
    if !(p_edge > 0.0 && p_edge <= 1.0) {
        return Err(invalid("p_edge", format!("{p_edge} must lie in (0, 1]")));
    }
    let mut rng = stream_rng(seed, Stream::Graph);
    for attempt in 1..=ER_MAX_ATTEMPTS {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p_edge {
                    edges.push(Edge::new(j, i));
                }
            }
        }
        let g = Graph::new(n, edges)?;
        if is_connected(&g) {
            return Ok((g, attempt));
        }
    }
    Err(Error::ResampleLimit {
        attempts: ER_MAX_ATTEMPTS,
        n,
        p_edge,
    })
}

pub fn generate_er_graph(n: usize, p_edge: f64, seed: u64) -> Result<Graph> {
    generate_er_graph_counted(n, p_edge, seed).map(|(g, _)| g)
}

fn check_state(g: &Graph, x_true: &[f64]) -> Result<()> {
    check_len("x_true", x_true.len(), g.n_nodes())?;
    let mean = x_true.iter().sum::<f64>() / x_true.len() as f64;
    if mean.abs() >= 1e-12 {
        return Err(invalid("x_true", format!("mean {mean:e} is not zero")));
    }
    Ok(())
}

/// Labels `z_e ~ Bernoulli(p)` drawn as `u_e < p` from the labels stream, so
/// label sets are nested across `p` for a fixed seed.
fn draw_labels(n_edges: usize, p: f64, seed: u64) -> Vec<u8> {
    let mut rng = stream_rng(seed, Stream::Labels);
    (0..n_edges)
        .map(|_| u8::from(rng.random::<f64>() < p))
        .collect()
}

/// `b = A x + eta`, `eta_e ~ N(0, sigma_e^2)`, `sigma_e = alpha` or `beta` by label.
pub fn sample_measurements(
    g: &Graph,
    x_true: &[f64],
    noise: MixtureNoise,
    seed: u64,
) -> Result<MeasurementSet> {
    noise.validate()?;
    check_state(g, x_true)?;
    let a = incidence_matrix(g);
    let clean = a.apply(&DVector::from_column_slice(x_true));
    let z = draw_labels(g.n_edges(), noise.p, seed);
    let mut rng = stream_rng(seed, Stream::Noise);
    let b = clean
        .iter()
        .zip(&z)
        .map(|(&c, &zi)| {
            let sigma = if zi == 1 { noise.beta } else { noise.alpha };
            let eta: f64 = rng.sample(StandardNormal);
            c + sigma * eta
        })
        .collect();
    Ok(MeasurementSet {
        graph: g.clone(),
        b,
        x_true: Some(x_true.to_vec()),
        z_true: Some(z),
        noise: Some(NoiseModel::Mixture(noise)),
        seed: Some(seed),
    })
}

/// `b = A x + (1 - z) alpha eta + z gamma`, `gamma_e ~ U[-delta/4, delta/4]`.
pub fn sample_mismatch(
    g: &Graph,
    x_true: &[f64],
    noise: MismatchNoise,
    seed: u64,
) -> Result<MeasurementSet> {
    noise.validate()?;
    check_state(g, x_true)?;
    let a = incidence_matrix(g);
    let clean = a.apply(&DVector::from_column_slice(x_true));
    let z = draw_labels(g.n_edges(), noise.p, seed);
    let mut rng = stream_rng(seed, Stream::Noise);
    let half = noise.delta / 4.0;
    let b = clean
        .iter()
        .zip(&z)
        .map(|(&c, &zi)| {
            // both draws are consumed on every edge so the streams stay aligned
            let eta: f64 = rng.sample(StandardNormal);
            let gamma = -half + 2.0 * half * rng.random::<f64>();
            if zi == 1 {
                c + gamma
            } else {
                c + noise.alpha * eta
            }
        })
        .collect();
    Ok(MeasurementSet {
        graph: g.clone(),
        b,
        x_true: Some(x_true.to_vec()),
        z_true: Some(z),
        noise: Some(NoiseModel::Mismatch(noise)),
        seed: Some(seed),
    })
}

//! Mixture likelihood, posterior responsibilities and the `V` / `V~`
//! objectives minimised by the EM estimators.
//!
//! Everything is evaluated in the log domain: with `alpha = 0.05` a residual
//! of a few tenths already underflows `exp(-r^2 / 2 alpha^2)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};
use crate::problem::Problem;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Per-edge probabilities of belonging to the `beta` (unreliable) component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SoftLabels(Vec<f64>);

impl SoftLabels {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(invalid("pi", format!("entry {k} = {v} is outside [0, 1]")));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for SoftLabels {
    type Error = crate::Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SoftLabels> for Vec<f64> {
    fn from(s: SoftLabels) -> Self {
        s.0
    }
}

fn check_scales(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid("alpha", format!("{alpha} must be > 0")));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(invalid("beta", format!("{beta} must be > 0")));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid("p", format!("{p} must lie in (0, 1)")));
    }
    Ok(())
}

fn logistic(l: f64) -> f64 {
    if l >= 0.0 {
        1.0 / (1.0 + (-l).exp())
    } else {
        let e = l.exp();
        e / (1.0 + e)
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Log-odds of the `beta` component for residual `r`.
#[inline]
pub(crate) fn posterior_log_odds(r: f64, alpha: f64, beta: f64, p: f64) -> f64 {
    (p / beta).ln() - ((1.0 - p) / alpha).ln()
        + 0.5 * r * r * (1.0 / (alpha * alpha) - 1.0 / (beta * beta))
}

#[inline]
pub(crate) fn posterior_unchecked(r: f64, alpha: f64, beta: f64, p: f64) -> f64 {
    logistic(posterior_log_odds(r, alpha, beta, p))
}

/// `f(z_e = 1 | r_e)`: probability that a measurement with residual `r`
/// comes from the `beta` component.
pub fn posterior(residual: f64, alpha: f64, beta: f64, p: f64) -> Result<f64> {
    check_scales(alpha, beta)?;
    check_p(p)?;
    Ok(posterior_unchecked(residual, alpha, beta, p))
}

pub(crate) fn posteriors(residual: &DVector<f64>, alpha: f64, beta: f64, p: f64) -> Vec<f64> {
    residual
        .iter()
        .map(|&r| posterior_unchecked(r, alpha, beta, p))
        .collect()
}

/// Binary entropy in nats, `H(0) = H(1) = 0`.
pub fn entropy(xi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(invalid("xi", format!("{xi} is outside [0, 1]")));
    }
    Ok(entropy_unchecked(xi))
}

pub(crate) fn entropy_unchecked(xi: f64) -> f64 {
    let xlogx = |v: f64| if v <= 0.0 { 0.0 } else { v * v.ln() };
    -(xlogx(xi) + xlogx(1.0 - xi))
}

/// Edge weights `(1 - pi_e) / alpha^2 + pi_e / beta^2`.
pub fn edge_weights(pi: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
    let (ia, ib) = (1.0 / (alpha * alpha), 1.0 / (beta * beta));
    pi.iter().map(|&q| (1.0 - q) * ia + q * ib).collect()
}

fn objective_from_residual(
    residual: &DVector<f64>,
    pi: &[f64],
    alpha: f64,
    beta: f64,
    epsilon: f64,
    p: f64,
) -> f64 {
    let shift = epsilon / residual.len() as f64;
    let (la, lb) = (((1.0 - p) / alpha).ln(), (p / beta).ln());
    let (ia, ib) = (1.0 / (alpha * alpha), 1.0 / (beta * beta));
    residual
        .iter()
        .zip(pi)
        .map(|(&r, &q)| {
            0.5 * (r * r + shift) * ((1.0 - q) * ia + q * ib)
                - q * lb
                - (1.0 - q) * la
                - entropy_unchecked(q)
        })
        .sum()
}

fn check_args(problem: &Problem, x: &DVector<f64>, pi: &SoftLabels) -> Result<()> {
    check_len("x", x.len(), problem.n_nodes())?;
    check_len("pi", pi.len(), problem.n_edges())
}

/// `V(x, pi, alpha, beta)`: weighted squared residuals plus the label
/// log-prior and entropy terms.
pub fn objective_v(
    problem: &Problem,
    x: &DVector<f64>,
    pi: &SoftLabels,
    alpha: f64,
    beta: f64,
    p: f64,
) -> Result<f64> {
    objective_v_tilde(problem, x, pi, alpha, beta, 0.0, p)
}

/// `V~`: `V` with every squared residual inflated by `epsilon / |E|`.
pub fn objective_v_tilde(
    problem: &Problem,
    x: &DVector<f64>,
    pi: &SoftLabels,
    alpha: f64,
    beta: f64,
    epsilon: f64,
    p: f64,
) -> Result<f64> {
    check_args(problem, x, pi)?;
    check_scales(alpha, beta)?;
    check_p(p)?;
    if !(epsilon >= 0.0) {
        return Err(invalid("epsilon", format!("{epsilon} must be >= 0")));
    }
    Ok(objective_from_residual(
        &problem.residual(x),
        pi.as_slice(),
        alpha,
        beta,
        epsilon,
        p,
    ))
}

pub(crate) fn objective_v_tilde_unchecked(
    problem: &Problem,
    x: &DVector<f64>,
    pi: &[f64],
    alpha: f64,
    beta: f64,
    epsilon: f64,
    p: f64,
) -> f64 {
    objective_from_residual(&problem.residual(x), pi, alpha, beta, epsilon, p)
}

/// `log f(b | x, alpha, beta)` under the two-component mixture.
pub fn log_likelihood(
    problem: &Problem,
    x: &DVector<f64>,
    alpha: f64,
    beta: f64,
    p: f64,
) -> Result<f64> {
    check_len("x", x.len(), problem.n_nodes())?;
    check_scales(alpha, beta)?;
    check_p(p)?;
    let (la, lb) = (((1.0 - p) / alpha).ln(), (p / beta).ln());
    let (ia, ib) = (0.5 / (alpha * alpha), 0.5 / (beta * beta));
    Ok(problem
        .residual(x)
        .iter()
        .map(|&r| log_add_exp(la - r * r * ia, lb - r * r * ib) - 0.5 * LN_2PI)
        .sum())
}

/// `P_s`: zero the `s` smallest entries. Ties go to the lowest edge index.
pub fn project_smallest(xi: &SoftLabels, s: usize) -> Result<SoftLabels> {
    if s > xi.len() {
        return Err(invalid(
            "s",
            format!("{s} exceeds the number of entries {}", xi.len()),
        ));
    }
    Ok(SoftLabels(project_smallest_vec(xi.as_slice(), s)))
}

pub(crate) fn project_smallest_vec(xi: &[f64], s: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xi.len()).collect();
    // sort_by is stable, so equal values keep index order
    order.sort_by(|&i, &j| xi[i].total_cmp(&xi[j]));
    let mut out = xi.to_vec();
    for &k in &order[..s] {
        out[k] = 0.0;
    }
    out
}

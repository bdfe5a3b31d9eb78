use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{config_hash, GraphSource, NoiseSpec, StateSpec};
use super::run::generate;
use super::sweep::trial_seeds;
use crate::error::{invalid, Result};
use crate::estimators::{dist_ls_em, lae, DistEmConfig, LaeConfig, TraceRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaeVsEmSpec {
    pub p_edges: Vec<f64>,
    pub n: usize,
    pub trials: usize,
    /// Length of every curve.
    pub iterations: usize,
    pub seed: u64,
    pub noise: NoiseSpec,
    pub state: StateSpec,
    /// Mixture parameters assumed by distributed LS-EM.
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Distributed LS-EM step; `None` uses the default fraction of the bound.
    pub tau: Option<f64>,
    pub lae_step0: f64,
    pub lae_decay: f64,
    /// NQE level (percent) at which a curve counts as converged.
    pub threshold_percent: f64,
}

impl Default for LaeVsEmSpec {
    fn default() -> Self {
        Self {
            p_edges: vec![0.25, 0.5, 0.75],
            n: 30,
            trials: 50,
            iterations: 400,
            seed: 0,
            noise: NoiseSpec::Mismatch {
                alpha: 0.05,
                p: 0.1,
                delta: 2.0,
            },
            state: StateSpec { lo: -1.0, hi: 1.0 },
            p: 0.2,
            alpha: 0.05,
            beta: 0.25,
            tau: None,
            lae_step0: 0.05,
            lae_decay: 0.5,
            threshold_percent: 0.1,
        }
    }
}

impl LaeVsEmSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p_edges.is_empty() {
            return Err(invalid("p_edges", "must not be empty"));
        }
        if self.trials == 0 || self.iterations == 0 {
            return Err(invalid("trials, iterations", "must be >= 1"));
        }
        self.noise.model()?;
        self.dist_config().validate()?;
        self.lae_config();
        Ok(())
    }

    fn dist_config(&self) -> DistEmConfig {
        DistEmConfig {
            tau: self.tau,
            // run the full budget; the curve is what matters
            tol: f64::MIN_POSITIVE,
            max_iter: self.iterations,
            ..DistEmConfig::new(self.p, self.alpha, self.beta)
        }
    }

    fn lae_config(&self) -> LaeConfig {
        LaeConfig::subgradient(self.lae_step0, self.lae_decay, self.iterations)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub estimator: String,
    /// Mean NQE (percent) over trials, indexed by iteration from 0.
    pub mean_nqe: Vec<f64>,
    /// First iteration whose mean NQE is at or below the threshold.
    pub first_below: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaeVsEmPoint {
    pub p_edge: f64,
    pub em: Curve,
    pub lae: Curve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaeVsEmReport {
    pub config_hash: String,
    pub root_seed: u64,
    pub threshold_percent: f64,
    pub points: Vec<LaeVsEmPoint>,
}

impl LaeVsEmReport {
    /// Columns `p_edge, iteration, estimator, mean_nqe`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["p_edge", "iteration", "estimator", "mean_nqe"])?;
        for pt in &self.points {
            for c in [&pt.em, &pt.lae] {
                for (i, v) in c.mean_nqe.iter().enumerate() {
                    w.write_record([
                        pt.p_edge.to_string(),
                        i.to_string(),
                        c.estimator.clone(),
                        v.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// NQE per iteration, held at the last value if the run stopped early.
fn nqe_curve(trace: &[TraceRow], len: usize) -> Vec<f64> {
    let mut c: Vec<f64> = trace.iter().map(|r| r.nqe.unwrap_or(f64::NAN)).collect();
    let last = c.last().copied().unwrap_or(f64::NAN);
    c.resize(len, last);
    c
}

fn mean_curve(estimator: &str, curves: &[Vec<f64>], threshold: f64) -> Curve {
    let len = curves[0].len();
    let k = curves.len() as f64;
    let mean_nqe: Vec<f64> = (0..len)
        .map(|i| curves.iter().map(|c| c[i]).sum::<f64>() / k)
        .collect();
    Curve {
        estimator: estimator.to_string(),
        first_below: mean_nqe.iter().position(|&v| v <= threshold),
        mean_nqe,
    }
}

pub fn cmd_lae_vs_em(spec: &LaeVsEmSpec) -> Result<LaeVsEmReport> {
    spec.validate()?;
    let seeds = trial_seeds(spec.seed, spec.trials);
    let len = spec.iterations + 1;
    let points = spec
        .p_edges
        .iter()
        .map(|&p_edge| {
            let source = GraphSource::ErdosRenyi { n: spec.n, p_edge };
            let pairs: Vec<(Vec<f64>, Vec<f64>)> = seeds
                .par_iter()
                .map(|&seed| {
                    let problem = generate(&source, &spec.noise, &spec.state, seed)?
                        .data
                        .problem()?;
                    let em = dist_ls_em(&problem, &spec.dist_config())?;
                    let l1 = lae(&problem, &spec.lae_config())?;
                    Ok((nqe_curve(&em.trace, len), nqe_curve(&l1.trace, len)))
                })
                .collect::<Result<_>>()?;
            let (em, l1): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            Ok(LaeVsEmPoint {
                p_edge,
                em: mean_curve("dist_ls_em", &em, spec.threshold_percent),
                lae: mean_curve("lae_subgradient", &l1, spec.threshold_percent),
            })
        })
        .collect::<Result<_>>()?;
    Ok(LaeVsEmReport {
        config_hash: config_hash(spec)?,
        root_seed: spec.seed,
        threshold_percent: spec.threshold_percent,
        points,
    })
}

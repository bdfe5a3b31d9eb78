use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{config_hash, EstimatorKind, EstimatorParams, NoiseSpec, StateSpec};
use super::run::{generate, run_trial};
use crate::error::{invalid, Result};
use crate::metrics::{summarize, Summary, TrialRecord};
use crate::noise::{derive_seed, stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    PEdge,
    P,
    BetaRatio,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::PEdge => "p_edge",
            SweepParam::P => "p",
            SweepParam::BetaRatio => "beta_ratio",
        }
    }

    pub fn default_grid(self) -> Vec<f64> {
        match self {
            SweepParam::PEdge => (1..=10).map(|i| i as f64 / 10.0).collect(),
            SweepParam::P => (1..=9).map(|i| 0.05 * i as f64).collect(),
            SweepParam::BetaRatio => (2..=10).map(f64::from).collect(),
        }
    }
}

/// The fixed experiment parameters that a sweep varies one at a time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Baseline {
    pub n: usize,
    pub p_edge: f64,
    pub p: f64,
    pub alpha: f64,
    pub beta_ratio: f64,
}

impl Default for Baseline {
    fn default() -> Self {
        Self {
            n: 50,
            p_edge: 0.3,
            p: 0.1,
            alpha: 0.05,
            beta_ratio: 5.0,
        }
    }
}

impl Baseline {
    pub fn with(self, param: SweepParam, value: f64) -> Self {
        match param {
            SweepParam::PEdge => Self {
                p_edge: value,
                ..self
            },
            SweepParam::P => Self { p: value, ..self },
            SweepParam::BetaRatio => Self {
                beta_ratio: value,
                ..self
            },
        }
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec::Mixture {
            alpha: self.alpha,
            beta: self.alpha * self.beta_ratio,
            p: self.p,
        }
    }
}

pub fn default_estimators() -> Vec<EstimatorKind> {
    vec![
        EstimatorKind::Wls,
        EstimatorKind::Ls,
        EstimatorKind::LsEm,
        EstimatorKind::DistLsEm,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    /// Defaults to the parameter's standard grid.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub base: Baseline,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub state: StateSpec,
    #[serde(default)]
    pub params: EstimatorParams,
    /// Draw the LS-EM starting `alpha0` once per sweep from
    /// `{0.1, ..., 0.5}` with `beta0 = 2 alpha0`.
    #[serde(default)]
    pub random_alpha0: bool,
}

fn default_trials() -> usize {
    200
}

impl SweepSpec {
    pub fn new(param: SweepParam) -> Self {
        Self {
            param,
            grid: None,
            base: Baseline::default(),
            trials: default_trials(),
            estimators: default_estimators(),
            seed: 0,
            state: StateSpec::default(),
            params: EstimatorParams::default(),
            random_alpha0: false,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        self.grid
            .clone()
            .unwrap_or_else(|| self.param.default_grid())
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.as_ref().is_some_and(|g| g.is_empty()) {
            return Err(invalid("grid", "must not be empty"));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be >= 1"));
        }
        if self.estimators.is_empty() {
            return Err(invalid("estimators", "must not be empty"));
        }
        for v in self.grid() {
            self.base.with(self.param, v).noise().model()?;
        }
        Ok(())
    }

    /// Estimator settings with the sweep-level LS-EM start applied.
    pub fn resolved_params(&self) -> EstimatorParams {
        let mut params = self.params;
        if self.random_alpha0 {
            let mut rng = stream_rng(self.seed, Stream::State);
            let a0 = 0.1 * rng.random_range(1..=5) as f64;
            params.ls_em.alpha0 = a0;
            params.ls_em.beta0 = 2.0 * a0;
        }
        params
    }
}

/// All trials of one estimator at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorCell {
    pub estimator: String,
    pub summary: Summary,
    pub mean_iterations: f64,
    pub converged_fraction: f64,
    pub mean_misclassification: Option<f64>,
    pub records: Vec<TrialRecord>,
}

impl EstimatorCell {
    pub fn from_records(estimator: &str, records: Vec<TrialRecord>) -> Result<Self> {
        let nqe: Vec<f64> = records.iter().map(|r| r.nqe_percent).collect();
        let n = records.len() as f64;
        let mis: Vec<f64> = records.iter().filter_map(|r| r.misclassification).collect();
        Ok(Self {
            estimator: estimator.to_string(),
            summary: summarize(&nqe)?,
            mean_iterations: records.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
            converged_fraction: records.iter().filter(|r| r.converged).count() as f64 / n,
            mean_misclassification: (mis.len() == records.len())
                .then(|| mis.iter().sum::<f64>() / n),
            records,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub value: f64,
    /// Erdos-Renyi draws per trial until the graph was connected.
    pub graph_attempts: Vec<usize>,
    pub cells: Vec<EstimatorCell>,
}

impl GridPoint {
    pub fn cell(&self, kind: EstimatorKind) -> Option<&EstimatorCell> {
        self.cells.iter().find(|c| c.estimator == kind.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub swept: String,
    pub config_hash: String,
    pub root_seed: u64,
    pub trial_seeds: Vec<u64>,
    pub points: Vec<GridPoint>,
}

impl SweepReport {
    /// Mean NQE of one estimator across the grid.
    pub fn means(&self, kind: EstimatorKind) -> Vec<f64> {
        self.points
            .iter()
            .filter_map(|p| p.cell(kind).map(|c| c.summary.mean))
            .collect()
    }

    pub fn medians(&self, kind: EstimatorKind) -> Vec<f64> {
        self.points
            .iter()
            .filter_map(|p| p.cell(kind).map(|c| c.summary.median))
            .collect()
    }

    /// Long format: `grid_value, estimator, trial, seed, nqe, iterations,
    /// converged, misclassification`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "grid_value",
            "estimator",
            "trial",
            "seed",
            "nqe",
            "iterations",
            "converged",
            "misclassification",
        ])?;
        for point in &self.points {
            for cell in &point.cells {
                for r in &cell.records {
                    w.write_record([
                        point.value.to_string(),
                        r.estimator.clone(),
                        r.trial.to_string(),
                        r.seed.to_string(),
                        r.nqe_percent.to_string(),
                        r.iterations.to_string(),
                        r.converged.to_string(),
                        r.misclassification
                            .map(|m| m.to_string())
                            .unwrap_or_default(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn trial_seeds(root: u64, trials: usize) -> Vec<u64> {
    (0..trials as u64).map(|i| derive_seed(root, i)).collect()
}

/// One grid point's worth of trials, run concurrently and gathered in trial
/// order. `setup` maps a trial seed to the data and estimator settings.
pub(crate) fn run_point<F>(
    value: f64,
    seeds: &[u64],
    estimators: &[EstimatorKind],
    setup: F,
) -> Result<GridPoint>
where
    F: Fn(u64) -> Result<(super::run::Generated, EstimatorParams)> + Sync,
{
    let per_trial: Vec<(usize, Vec<TrialRecord>)> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| {
            let (generated, params) = setup(seed)?;
            let records = estimators
                .iter()
                .map(|&k| run_trial(i, seed, k, &generated.data, &params).map(|(r, _)| r))
                .collect::<Result<Vec<_>>>()?;
            Ok((generated.graph_attempts, records))
        })
        .collect::<Result<_>>()?;
    let graph_attempts = per_trial.iter().map(|(a, _)| *a).collect();
    let mut columns: Vec<Vec<TrialRecord>> =
        vec![Vec::with_capacity(seeds.len()); estimators.len()];
    for (_, records) in per_trial {
        for (col, r) in columns.iter_mut().zip(records) {
            col.push(r);
        }
    }
    let cells = estimators
        .iter()
        .zip(columns)
        .map(|(k, recs)| EstimatorCell::from_records(k.name(), recs))
        .collect::<Result<_>>()?;
    Ok(GridPoint {
        value,
        graph_attempts,
        cells,
    })
}

pub fn cmd_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    spec.validate()?;
    let params = spec.resolved_params();
    let seeds = trial_seeds(spec.seed, spec.trials);
    let points = spec
        .grid()
        .into_iter()
        .map(|value| {
            let base = spec.base.with(spec.param, value);
            let source = super::config::GraphSource::ErdosRenyi {
                n: base.n,
                p_edge: base.p_edge,
            };
            run_point(value, &seeds, &spec.estimators, |seed| {
                Ok((generate(&source, &base.noise(), &spec.state, seed)?, params))
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport {
        swept: spec.param.name().to_string(),
        config_hash: config_hash(spec)?,
        root_seed: spec.seed,
        trial_seeds: seeds,
        points,
    })
}

/// Number of adjacent pairs that break the requested direction.
pub fn inversions(values: &[f64], increasing: bool) -> usize {
    values
        .windows(2)
        .filter(|w| {
            if increasing {
                w[1] <= w[0]
            } else {
                w[1] >= w[0]
            }
        })
        .count()
}

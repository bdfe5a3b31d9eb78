use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{
    config_hash, load_json, EstimatorKind, EstimatorParams, GraphSource, NoiseSpec, RunConfig,
    StateSpec,
};
use crate::error::{Error, Result};
use crate::estimators::{
    dist_ls_em, gd_wls, lae, ls, ls_em, wls, EstimateResult, GdConfig, TraceRow,
};
use crate::graph::{spectral_norm, weighted_laplacian, Graph};
use crate::metrics::{misclassification, TrialRecord};
use crate::noise::{
    generate_er_graph_counted, generate_state_in, sample_measurements, sample_mismatch,
    MeasurementSet, NoiseModel,
};

/// Generated data together with the number of graph draws it took.
#[derive(Debug, Clone)]
pub struct Generated {
    pub data: MeasurementSet,
    pub graph_attempts: usize,
}

pub fn sample_on(
    graph: &Graph,
    noise: &NoiseSpec,
    state: &StateSpec,
    seed: u64,
) -> Result<MeasurementSet> {
    let x = generate_state_in(graph.n_nodes(), state.lo, state.hi, seed)?;
    match noise.model()? {
        NoiseModel::Mixture(m) => sample_measurements(graph, &x, m, seed),
        NoiseModel::Mismatch(m) => sample_mismatch(graph, &x, m, seed),
    }
}

pub fn generate(
    source: &GraphSource,
    noise: &NoiseSpec,
    state: &StateSpec,
    seed: u64,
) -> Result<Generated> {
    match source {
        GraphSource::Example1 => Ok(Generated {
            data: crate::example1::measurement_set(),
            graph_attempts: 0,
        }),
        GraphSource::ErdosRenyi { n, p_edge } => {
            let (g, attempts) = generate_er_graph_counted(*n, *p_edge, seed)?;
            Ok(Generated {
                data: sample_on(&g, noise, state, seed)?,
                graph_attempts: attempts,
            })
        }
        GraphSource::File { path } => {
            let g: Graph = load_json(path)?;
            Ok(Generated {
                data: sample_on(&g, noise, state, seed)?,
                graph_attempts: 0,
            })
        }
        GraphSource::Measurements { path } => {
            let m: MeasurementSet = load_json(path)?;
            m.validate()?;
            Ok(Generated {
                data: m,
                graph_attempts: 0,
            })
        }
    }
}

/// Runs one estimator on a measurement set.
pub fn run_estimator(
    kind: EstimatorKind,
    data: &MeasurementSet,
    params: &EstimatorParams,
) -> Result<EstimateResult> {
    let problem = data.problem()?;
    let true_weights = || {
        data.true_weights().ok_or_else(|| {
            Error::Config(format!(
                "{kind} needs mixture noise with known labels to form the true weights"
            ))
        })
    };
    match kind {
        EstimatorKind::Wls => wls(&problem, &true_weights()?),
        EstimatorKind::Ls => ls(&problem),
        EstimatorKind::Lae => lae(&problem, &params.lae.irls()),
        EstimatorKind::LaeSubgradient => lae(&problem, &params.lae.subgradient()),
        EstimatorKind::GdWls => {
            let w = true_weights()?;
            let l = weighted_laplacian(problem.incidence(), &w)?;
            let tau = params.gd.tau_scale / spectral_norm(l.as_matrix());
            let cfg = GdConfig {
                tau,
                tol: params.gd.tol,
                max_iter: params.gd.max_iter,
            };
            gd_wls(&problem, &w, &cfg)
        }
        EstimatorKind::LsEm => {
            let (p, _, _) = params.model.resolve(data.noise.as_ref())?;
            ls_em(&problem, &params.ls_em.config(p))
        }
        EstimatorKind::DistLsEm => {
            let (p, alpha, beta) = params.model.resolve(data.noise.as_ref())?;
            dist_ls_em(&problem, &params.dist.config(p, alpha, beta))
        }
    }
}

/// Runs an estimator and condenses the outcome into a [`TrialRecord`].
pub fn run_trial(
    trial: usize,
    seed: u64,
    kind: EstimatorKind,
    data: &MeasurementSet,
    params: &EstimatorParams,
) -> Result<(TrialRecord, EstimateResult)> {
    let start = Instant::now();
    let result = run_estimator(kind, data, params)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let x_true = data
        .x_true
        .as_ref()
        .ok_or_else(|| Error::Config("data carries no ground truth".into()))?;
    let mis = match (&result.pi, &data.z_true) {
        (Some(pi), Some(z)) => Some(misclassification(pi.as_slice(), z, 0.5)?),
        _ => None,
    };
    let record = TrialRecord {
        trial,
        seed,
        estimator: kind.name().to_string(),
        nqe_percent: result.nqe(x_true)?,
        iterations: result.iterations,
        converged: result.converged,
        misclassification: mis,
        runtime_ms,
    };
    Ok((record, result))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub seed: u64,
    pub estimator: String,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub graph_attempts: usize,
    pub nqe_percent: Option<f64>,
    pub misclassification: Option<f64>,
    pub result: EstimateResult,
}

pub fn cmd_run(config: &RunConfig) -> Result<RunReport> {
    let hash = config_hash(config)?;
    let generated = generate(&config.graph, &config.noise, &config.state, config.seed)?;
    let data = &generated.data;
    let result = run_estimator(config.estimator, data, &config.params)?;
    let nqe_percent = match &data.x_true {
        Some(x) => Some(result.nqe(x)?),
        None => None,
    };
    let misclassification = match (&result.pi, &data.z_true) {
        (Some(pi), Some(z)) => Some(misclassification(pi.as_slice(), z, 0.5)?),
        _ => None,
    };
    Ok(RunReport {
        config_hash: hash,
        seed: config.seed,
        estimator: config.estimator.name().to_string(),
        n_nodes: data.graph.n_nodes(),
        n_edges: data.graph.n_edges(),
        graph_attempts: generated.graph_attempts,
        nqe_percent,
        misclassification,
        result,
    })
}

/// Trace CSV with columns `iter, objective, step_norm, alpha_hat, beta_hat,
/// epsilon, kappa, nqe`; inapplicable cells are empty.
pub fn write_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if trace.is_empty() {
        w.write_record([
            "iter",
            "objective",
            "step_norm",
            "alpha_hat",
            "beta_hat",
            "epsilon",
            "kappa",
            "nqe",
        ])?;
    }
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

use serde::{Deserialize, Serialize};

use super::config::{config_hash, EstimatorKind, GraphSource, StateSpec};
use super::run::generate;
use super::sweep::{run_point, trial_seeds, Baseline, SweepReport};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum RobustnessMode {
    /// The assumed `(alpha, beta)` are `c` times the true values.
    RatioKnown,
    /// The true ratio `beta / alpha` varies while the estimator keeps
    /// assuming the baseline ratio.
    AlphaKnown,
}

impl RobustnessMode {
    pub fn name(self) -> &'static str {
        match self {
            RobustnessMode::RatioKnown => "ratio_known",
            RobustnessMode::AlphaKnown => "alpha_known",
        }
    }

    pub fn default_factors(self) -> Vec<f64> {
        match self {
            RobustnessMode::RatioKnown => vec![0.5, 0.75, 1.0, 1.25, 1.5],
            RobustnessMode::AlphaKnown => vec![2.0, 4.0, 6.0, 8.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessSpec {
    pub mode: RobustnessMode,
    #[serde(default)]
    pub factors: Option<Vec<f64>>,
    #[serde(default)]
    pub base: Baseline,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub state: StateSpec,
    #[serde(default)]
    pub params: super::config::EstimatorParams,
}

fn default_trials() -> usize {
    250
}

impl RobustnessSpec {
    pub fn new(mode: RobustnessMode) -> Self {
        Self {
            mode,
            factors: None,
            base: Baseline::default(),
            trials: default_trials(),
            seed: 0,
            state: StateSpec::default(),
            params: Default::default(),
        }
    }

    pub fn factors(&self) -> Vec<f64> {
        self.factors
            .clone()
            .unwrap_or_else(|| self.mode.default_factors())
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.factors();
        if f.is_empty() {
            return Err(invalid("factors", "must not be empty"));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be >= 1"));
        }
        let ok = match self.mode {
            RobustnessMode::RatioKnown => f.iter().all(|&c| c > 0.0 && c.is_finite()),
            RobustnessMode::AlphaKnown => f.iter().all(|&r| r > 1.0 && r.is_finite()),
        };
        if !ok {
            let need = match self.mode {
                RobustnessMode::RatioKnown => "positive scale factors",
                RobustnessMode::AlphaKnown => "true ratios beta/alpha > 1",
            };
            return Err(invalid(
                "factors",
                format!("{} needs {need}, got {f:?}", self.mode.name()),
            ));
        }
        self.base.noise().model()?;
        Ok(())
    }
}

/// Distributed LS-EM under mis-specified noise scales, one grid point per
/// factor, with the same trial seeds at every point.
pub fn cmd_robustness(spec: &RobustnessSpec) -> Result<SweepReport> {
    spec.validate()?;
    let seeds = trial_seeds(spec.seed, spec.trials);
    let kinds = [EstimatorKind::DistLsEm];
    let points = spec
        .factors()
        .into_iter()
        .map(|f| {
            let base = spec.base;
            let (truth, assumed_alpha, assumed_beta) = match spec.mode {
                RobustnessMode::RatioKnown => {
                    (base, f * base.alpha, f * base.alpha * base.beta_ratio)
                }
                RobustnessMode::AlphaKnown => (
                    Baseline {
                        beta_ratio: f,
                        ..base
                    },
                    base.alpha,
                    base.alpha * base.beta_ratio,
                ),
            };
            let mut params = spec.params;
            params.model.alpha = Some(assumed_alpha);
            params.model.beta = Some(assumed_beta);
            let source = GraphSource::ErdosRenyi {
                n: truth.n,
                p_edge: truth.p_edge,
            };
            run_point(f, &seeds, &kinds, |seed| {
                Ok((
                    generate(&source, &truth.noise(), &spec.state, seed)?,
                    params,
                ))
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport {
        swept: spec.mode.name().to_string(),
        config_hash: config_hash(spec)?,
        root_seed: spec.seed,
        trial_seeds: seeds,
        points,
    })
}

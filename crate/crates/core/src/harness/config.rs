use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::{DistEmConfig, LaeConfig, LaeMode, LsEmConfig};
use crate::noise::{MismatchNoise, MixtureNoise, NoiseModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Wls,
    Ls,
    Lae,
    LaeSubgradient,
    GdWls,
    LsEm,
    DistLsEm,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 7] = [
        EstimatorKind::Wls,
        EstimatorKind::Ls,
        EstimatorKind::Lae,
        EstimatorKind::LaeSubgradient,
        EstimatorKind::GdWls,
        EstimatorKind::LsEm,
        EstimatorKind::DistLsEm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Wls => "wls",
            EstimatorKind::Ls => "ls",
            EstimatorKind::Lae => "lae",
            EstimatorKind::LaeSubgradient => "lae_subgradient",
            EstimatorKind::GdWls => "gd_wls",
            EstimatorKind::LsEm => "ls_em",
            EstimatorKind::DistLsEm => "dist_ls_em",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the graph (and possibly the measurements) come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    /// The embedded five-node example, measurements included.
    Example1,
    ErdosRenyi {
        n: usize,
        p_edge: f64,
    },
    /// A graph JSON file; state and measurements are generated.
    File {
        path: PathBuf,
    },
    /// A complete measurement-set JSON file.
    Measurements {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Mixture {
        alpha: f64,
        beta: f64,
        p: f64,
    },
    Mismatch {
        alpha: f64,
        p: f64,
        #[serde(default = "default_delta")]
        delta: f64,
    },
}

fn default_delta() -> f64 {
    2.0
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::Mixture {
            alpha: 0.05,
            beta: 0.25,
            p: 0.1,
        }
    }
}

impl NoiseSpec {
    pub fn model(&self) -> Result<NoiseModel> {
        Ok(match *self {
            NoiseSpec::Mixture { alpha, beta, p } => {
                NoiseModel::Mixture(MixtureNoise::new(alpha, beta, p)?)
            }
            NoiseSpec::Mismatch { alpha, p, delta } => {
                NoiseModel::Mismatch(MismatchNoise::new(alpha, p, delta)?)
            }
        })
    }
}

/// Node values are drawn uniformly from `[lo, hi]` and then centered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateSpec {
    pub lo: f64,
    pub hi: f64,
}

impl Default for StateSpec {
    fn default() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }
}

/// Mixture parameters assumed by the EM estimators. Missing entries fall
/// back to the true mixture parameters of the data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub p: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

impl ModelParams {
    /// `(p, alpha, beta)`.
    pub fn resolve(&self, noise: Option<&NoiseModel>) -> Result<(f64, f64, f64)> {
        let (dp, da, db) = match noise {
            Some(NoiseModel::Mixture(m)) => (Some(m.p), Some(m.alpha), Some(m.beta)),
            Some(NoiseModel::Mismatch(m)) => (Some(m.p), Some(m.alpha), None),
            None => (None, None, None),
        };
        let pick = |v: Option<f64>, d: Option<f64>, name: &str| {
            v.or(d).ok_or_else(|| {
                Error::Config(format!("model.{name} must be given for this noise model"))
            })
        };
        Ok((
            pick(self.p, dp, "p")?,
            pick(self.alpha, da, "alpha")?,
            pick(self.beta, db, "beta")?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LsEmParams {
    pub s: Option<usize>,
    pub c1: f64,
    pub c2: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LsEmParams {
    fn default() -> Self {
        let d = LsEmConfig::default();
        Self {
            s: d.s,
            c1: d.c1,
            c2: d.c2,
            alpha0: d.alpha0,
            beta0: d.beta0,
            tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

impl LsEmParams {
    pub fn config(&self, p: f64) -> LsEmConfig {
        LsEmConfig {
            p,
            s: self.s,
            c1: self.c1,
            c2: self.c2,
            alpha0: self.alpha0,
            beta0: self.beta0,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistParams {
    pub tau: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DistParams {
    fn default() -> Self {
        let d = DistEmConfig::new(0.1, 0.1, 1.0);
        Self {
            tau: d.tau,
            tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

impl DistParams {
    pub fn config(&self, p: f64, alpha: f64, beta: f64) -> DistEmConfig {
        DistEmConfig {
            p,
            alpha,
            beta,
            tau: self.tau,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GdParams {
    /// Step as a multiple of `1 / ||L_W||`; must lie in `(0, 2)`.
    pub tau_scale: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GdParams {
    fn default() -> Self {
        Self {
            tau_scale: 1.0,
            tol: 1e-12,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaeParams {
    pub delta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub step0: f64,
    pub decay: f64,
    pub subgradient_iters: usize,
}

impl Default for LaeParams {
    fn default() -> Self {
        let d = LaeConfig::default();
        let delta = match d.mode {
            LaeMode::Irls { delta } => delta,
            LaeMode::Subgradient { .. } => 1e-8,
        };
        Self {
            delta,
            tol: d.tol,
            max_iter: d.max_iter,
            step0: 0.05,
            decay: 0.5,
            subgradient_iters: 1000,
        }
    }
}

impl LaeParams {
    pub fn irls(&self) -> LaeConfig {
        LaeConfig {
            mode: LaeMode::Irls { delta: self.delta },
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }

    pub fn subgradient(&self) -> LaeConfig {
        LaeConfig::subgradient(self.step0, self.decay, self.subgradient_iters)
    }
}

/// Per-estimator settings shared by every command.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorParams {
    pub model: ModelParams,
    pub ls_em: LsEmParams,
    pub dist: DistParams,
    pub gd: GdParams,
    pub lae: LaeParams,
}

/// A single deterministic run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub seed: u64,
    pub graph: GraphSource,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub state: StateSpec,
    #[serde(default)]
    pub params: EstimatorParams,
}

/// Parses JSON, reporting the file together with serde's line and column.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}

/// SHA-256 of the canonical JSON encoding, hex.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let canonical = serde_json::to_vec(config)?;
    Ok(hex::encode(Sha256::digest(&canonical)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_estimator_lists_names() {
        let err = parse_json::<RunConfig>(
            r#"{"estimator": "kalman", "graph": "example1"}"#,
            "cfg.json",
        )
        .unwrap_err()
        .to_string();
        for k in EstimatorKind::ALL {
            assert!(err.contains(k.name()), "{err}");
        }
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "{\n  \"estimator\": \"ls\",\n  \"graph\": {\"erdos_renyi\": {\"n\": \"ten\", \"p_edge\": 0.3}}\n}";
        let err = parse_json::<RunConfig>(text, "cfg.json")
            .unwrap_err()
            .to_string();
        assert!(err.starts_with("config error: cfg.json:"), "{err}");
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c: RunConfig = parse_json(
            r#"{"estimator": "ls_em", "graph": {"erdos_renyi": {"n": 20, "p_edge": 0.3}}}"#,
            "x",
        )
        .unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.noise, NoiseSpec::default());
        assert_eq!(c.params.ls_em.c1, 1.0);
        assert_eq!(c.params.ls_em.tol, 1e-4);
        let same = config_hash(&c).unwrap();
        assert_eq!(same.len(), 64);
        assert_eq!(same, config_hash(&c.clone()).unwrap());
    }

    #[test]
    fn model_params_fall_back_to_truth() {
        let mix = NoiseSpec::default().model().unwrap();
        assert_eq!(
            ModelParams::default().resolve(Some(&mix)).unwrap(),
            (0.1, 0.05, 0.25)
        );
        let mm = NoiseSpec::Mismatch {
            alpha: 0.05,
            p: 0.1,
            delta: 2.0,
        }
        .model()
        .unwrap();
        assert!(ModelParams::default().resolve(Some(&mm)).is_err());
        let given = ModelParams {
            p: Some(0.2),
            alpha: None,
            beta: Some(0.25),
        };
        assert_eq!(given.resolve(Some(&mm)).unwrap(), (0.2, 0.05, 0.25));
    }
}

//! Experiment drivers behind the `relest` command line: the worked example,
//! single configured runs, parameter sweeps, robustness studies and the
//! LAE versus distributed LS-EM convergence comparison.
//!
//! Every command is a pure function of its spec. Trial `i` of a study uses
//! the seed `derive_seed(root, i)` at every grid point, so all estimators in a
//! trial see the same measurements and any output row can be replayed from
//! its recorded seed.

pub mod config;
pub mod example;
pub mod laevsem;
pub mod robustness;
pub mod run;
pub mod sweep;

pub use config::{config_hash, load_json, parse_json, EstimatorKind, EstimatorParams, RunConfig};
pub use example::{cmd_example1, Example1Report};
pub use laevsem::{cmd_lae_vs_em, LaeVsEmReport, LaeVsEmSpec};
pub use robustness::{cmd_robustness, RobustnessMode, RobustnessSpec};
pub use run::{
    cmd_run, generate, run_estimator, run_trial, write_json, write_trace_csv, RunReport,
};
pub use sweep::{cmd_sweep, inversions, Baseline, SweepParam, SweepReport, SweepSpec};

use std::fmt;

use serde::{Deserialize, Serialize};

use super::config::{EstimatorKind, EstimatorParams};
use super::run::run_estimator;
use crate::error::Result;
use crate::example1 as ex;

/// One tolerance check against a published number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    /// Absolute tolerance, or relative when `relative` is set.
    pub tolerance: f64,
    pub relative: bool,
    pub pass: bool,
}

impl Check {
    fn absolute(name: String, expected: f64, actual: f64, tolerance: f64) -> Self {
        Self {
            pass: (actual - expected).abs() <= tolerance,
            name,
            expected,
            actual,
            tolerance,
            relative: false,
        }
    }

    fn relative(name: String, expected: f64, actual: f64, tolerance: f64) -> Self {
        Self {
            pass: ((actual - expected) / expected).abs() <= tolerance,
            name,
            expected,
            actual,
            tolerance,
            relative: true,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tol = if self.relative {
            format!("{}%", self.tolerance * 100.0)
        } else {
            format!("{:e}", self.tolerance)
        };
        write!(
            f,
            "{} {}: expected {} got {:.6} (tol {tol})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.expected,
            self.actual
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateLine {
    pub estimator: String,
    pub x_hat: Vec<f64>,
    pub nqe_ratio: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example1Report {
    pub estimates: Vec<EstimateLine>,
    pub checks: Vec<Check>,
}

impl Example1Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn estimate(&self, kind: EstimatorKind) -> Option<&EstimateLine> {
        self.estimates.iter().find(|e| e.estimator == kind.name())
    }
}

impl fmt::Display for Example1Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.estimates {
            let xs: Vec<String> = e.x_hat.iter().map(|v| format!("{v:.3}")).collect();
            writeln!(
                f,
                "{:<12} x = [{}]  nqe ratio = {:.3e}  iterations = {}",
                e.estimator,
                xs.join(", "),
                e.nqe_ratio,
                e.iterations
            )?;
        }
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

pub fn cmd_example1() -> Result<Example1Report> {
    let data = ex::measurement_set();
    let params = EstimatorParams::default();
    let kinds = [
        EstimatorKind::Wls,
        EstimatorKind::Ls,
        EstimatorKind::Lae,
        EstimatorKind::LsEm,
        EstimatorKind::DistLsEm,
    ];
    let mut estimates = Vec::new();
    for kind in kinds {
        let r = run_estimator(kind, &data, &params)?;
        estimates.push(EstimateLine {
            estimator: kind.name().to_string(),
            nqe_ratio: r.nqe(&ex::X_TRUE)? / 100.0,
            x_hat: r.x_hat,
            iterations: r.iterations,
        });
    }
    let mut checks = Vec::new();
    for (kind, printed) in [
        (EstimatorKind::Wls, ex::WLS_ESTIMATE),
        (EstimatorKind::Ls, ex::LS_ESTIMATE),
    ] {
        let x = &estimates
            .iter()
            .find(|e| e.estimator == kind.name())
            .expect("ran above")
            .x_hat;
        for (i, (&want, &got)) in printed.iter().zip(x).enumerate() {
            checks.push(Check::absolute(format!("{kind} x[{i}]"), want, got, 5e-4));
        }
    }
    for (kind, want, tol) in [
        (EstimatorKind::Wls, ex::WLS_NQE_RATIO, 0.02),
        (EstimatorKind::Ls, ex::LS_NQE_RATIO, 0.02),
        (EstimatorKind::Lae, ex::LAE_NQE_RATIO, 0.10),
    ] {
        let got = estimates
            .iter()
            .find(|e| e.estimator == kind.name())
            .expect("ran above")
            .nqe_ratio;
        checks.push(Check::relative(format!("{kind} nqe ratio"), want, got, tol));
    }
    Ok(Example1Report { estimates, checks })
}

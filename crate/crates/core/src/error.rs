use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("step size tau = {tau} violates the convergence bound tau < {bound} ({rule})")]
    StepSize {
        tau: f64,
        bound: f64,
        rule: &'static str,
    },

    #[error("no connected Erdos-Renyi graph after {attempts} attempts (n = {n}, p_edge = {p_edge}); use a larger p_edge")]
    ResampleLimit {
        attempts: usize,
        n: usize,
        p_edge: f64,
    },

    #[error("instance too large for exhaustive search: {edges} edges (limit {limit})")]
    TooLarge { edges: usize, limit: usize },

    #[error("no feasible labelling found")]
    Infeasible,

    #[error("message logging was not enabled for this run")]
    LoggingDisabled,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_len(what: &'static str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            got,
            expected,
        })
    }
}

//! Estimation of node values from noisy pairwise differences on a graph,
//! when a fraction of the measurements are far noisier than the rest.
//!
//! The crate provides the graph algebra (incidence matrices, weighted
//! Laplacians and their pseudo-inverses), a seeded noise generator, the
//! mixture-model objectives, a family of estimators including centralized and
//! distributed LS-EM, a round-based network simulator and an experiment
//! harness.

// `!(x > 0.0)` style checks are there to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod example1;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod noise;
pub mod objectives;
pub mod problem;
pub mod simnet;

pub use error::{Error, Result};
pub use problem::Problem;

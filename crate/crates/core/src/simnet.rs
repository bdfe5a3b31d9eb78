//! Synchronous message-passing execution of distributed LS-EM. Each node
//! keeps its own coordinate and the quantities of its incident edges, and
//! learns about the rest of the network only through the values its
//! neighbours send each round.

use std::io::Write;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{relative_step, require_connected, DistEmConfig, EstimateResult, TraceRow};
use crate::objectives::{objective_v_tilde_unchecked, posterior_unchecked, SoftLabels};
use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentEdge {
    pub edge: usize,
    pub neighbor: usize,
    /// `+1` when this node is the edge's `plus` end, `-1` otherwise.
    pub sign: f64,
    pub b: f64,
    pub w: f64,
    pub pi: f64,
    /// Position of this edge in the neighbour's incident list.
    #[serde(skip)]
    slot_at_neighbor: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub id: usize,
    pub x: f64,
    pub incident: Vec<IncidentEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundMessage {
    pub round: usize,
    pub sender: usize,
    pub receiver: usize,
    pub edge: usize,
    pub payload: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dist: DistEmConfig,
    /// Round budget; `None` uses `dist.max_iter`.
    pub rounds: Option<usize>,
    pub log_messages: bool,
    /// Update nodes concurrently within each round.
    pub parallel: bool,
}

impl SimConfig {
    pub fn new(dist: DistEmConfig) -> Self {
        Self {
            dist,
            rounds: None,
            log_messages: false,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimRun {
    pub result: EstimateResult,
    pub nodes: Vec<NodeState>,
    pub rounds: usize,
    log: Option<Vec<RoundMessage>>,
}

impl SimRun {
    /// Every message of the run, ordered by round, sender, then the sender's
    /// incident-edge order.
    pub fn message_log(&self) -> Result<&[RoundMessage]> {
        self.log.as_deref().ok_or(Error::LoggingDisabled)
    }

    /// One JSON object per line.
    pub fn write_message_log<W: Write>(&self, mut out: W) -> Result<()> {
        for m in self.message_log()? {
            serde_json::to_writer(&mut out, m)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

struct Params {
    tau: f64,
    alpha: f64,
    beta: f64,
    p: f64,
}

impl NodeState {
    /// One round of local computation given the neighbour values received
    /// this round, in incident-edge order.
    fn update(&mut self, inbox: &[f64], first: bool, k: &Params) {
        let (ia, ib) = (1.0 / (k.alpha * k.alpha), 1.0 / (k.beta * k.beta));
        let mut acc = 0.0;
        for (e, &other) in self.incident.iter_mut().zip(inbox) {
            let (plus, minus) = if e.sign > 0.0 {
                (self.x, other)
            } else {
                (other, self.x)
            };
            let r = e.b - (plus - minus);
            if !first {
                e.pi = posterior_unchecked(r, k.alpha, k.beta, k.p);
            }
            e.w = (1.0 - e.pi) * ia + e.pi * ib;
            acc += e.sign * (e.w * r);
        }
        self.x += k.tau * acc;
    }
}

fn build_nodes(problem: &Problem) -> Vec<NodeState> {
    let g = problem.graph();
    let incident = g.incident_edges();
    let mut nodes: Vec<NodeState> = incident
        .iter()
        .enumerate()
        .map(|(v, list)| NodeState {
            id: v,
            x: 0.0,
            incident: list
                .iter()
                .map(|&k| {
                    let e = g.edges()[k];
                    IncidentEdge {
                        edge: k,
                        neighbor: e.other(v),
                        sign: e.sign(v),
                        b: problem.b()[k],
                        w: 0.0,
                        pi: 0.0,
                        slot_at_neighbor: 0,
                    }
                })
                .collect(),
        })
        .collect();
    for node in &mut nodes {
        for e in &mut node.incident {
            e.slot_at_neighbor = incident[e.neighbor]
                .iter()
                .position(|&k| k == e.edge)
                .expect("edge is incident to both ends");
        }
    }
    nodes
}

/// Every node sends its value across each incident edge. Returns the
/// per-node inboxes in incident-edge order.
fn exchange(
    nodes: &[NodeState],
    round: usize,
    log: &mut Option<Vec<RoundMessage>>,
) -> Vec<Vec<f64>> {
    let mut inbox: Vec<Vec<f64>> = nodes.iter().map(|n| vec![0.0; n.incident.len()]).collect();
    for node in nodes {
        for e in &node.incident {
            inbox[e.neighbor][e.slot_at_neighbor] = node.x;
            if let Some(log) = log.as_mut() {
                log.push(RoundMessage {
                    round,
                    sender: node.id,
                    receiver: e.neighbor,
                    edge: e.edge,
                    payload: node.x,
                });
            }
        }
    }
    inbox
}

/// Runs distributed LS-EM as synchronous rounds. The stopping rule and the
/// final labels are evaluated outside the network from the gathered node
/// values, using the same formulas as the matrix-form iteration.
pub fn run_rounds(problem: &Problem, config: &SimConfig) -> Result<SimRun> {
    let dist = &config.dist;
    dist.validate()?;
    require_connected(problem)?;
    let params = Params {
        tau: dist.resolve_tau(problem)?,
        alpha: dist.alpha,
        beta: dist.beta,
        p: dist.p,
    };
    let budget = config.rounds.unwrap_or(dist.max_iter);
    let mut nodes = build_nodes(problem);
    let mut log = config.log_messages.then(Vec::new);

    let gather =
        |nodes: &[NodeState]| DVector::from_iterator(nodes.len(), nodes.iter().map(|n| n.x));
    let labels = |x: &DVector<f64>| -> Vec<f64> {
        crate::estimators::edge_residuals(problem, x)
            .into_iter()
            .map(|r| posterior_unchecked(r, params.alpha, params.beta, params.p))
            .collect()
    };
    let v = |x: &DVector<f64>, pi: &[f64]| {
        objective_v_tilde_unchecked(problem, x, pi, params.alpha, params.beta, 0.0, params.p)
    };

    let mut x = gather(&nodes);
    let mut pi = vec![0.0; problem.n_edges()];
    let mut trace = vec![TraceRow {
        iter: 0,
        objective: v(&x, &pi),
        step_norm: 0.0,
        alpha_hat: None,
        beta_hat: None,
        epsilon: None,
        kappa: None,
        nqe: problem.nqe_of(&x),
    }];
    let mut converged = false;
    let mut round = 0;
    while round < budget {
        let inbox = exchange(&nodes, round + 1, &mut log);
        let first = round == 0;
        if config.parallel {
            nodes
                .par_iter_mut()
                .zip(inbox.par_iter())
                .for_each(|(n, msgs)| n.update(msgs, first, &params));
        } else {
            for (n, msgs) in nodes.iter_mut().zip(&inbox) {
                n.update(msgs, first, &params);
            }
        }
        round += 1;
        let next = gather(&nodes);
        let (step, sc) = relative_step(&next, &x);
        x = next;
        pi = labels(&x);
        trace.push(TraceRow {
            iter: round,
            objective: v(&x, &pi),
            step_norm: step,
            alpha_hat: None,
            beta_hat: None,
            epsilon: None,
            kappa: None,
            nqe: problem.nqe_of(&x),
        });
        if sc < dist.tol {
            converged = true;
            break;
        }
    }

    let mut last_w = vec![0.0; problem.n_edges()];
    for n in &nodes {
        for e in &n.incident {
            last_w[e.edge] = e.w;
        }
    }
    let fixed_point = crate::estimators::fixed_point_residuals(problem, &x, &pi, &last_w, dist);
    let result = EstimateResult {
        x_hat: x.as_slice().to_vec(),
        pi: Some(SoftLabels::new(pi)?),
        alpha_hat: Some(params.alpha),
        beta_hat: Some(params.beta),
        epsilon: None,
        iterations: round,
        converged,
        trace,
        fixed_point: Some(fixed_point),
        diagnostics: None,
    };
    Ok(SimRun {
        result,
        nodes,
        rounds: round,
        log,
    })
}

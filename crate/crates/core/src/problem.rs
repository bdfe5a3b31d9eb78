use nalgebra::DVector;

use crate::error::{check_len, invalid, Result};
use crate::graph::{incidence_matrix, Graph, IncidenceMatrix};

/// A relative-estimation instance: graph, incidence matrix and measurement
/// vector. The optional ground truth is only used to report NQE in traces.
#[derive(Debug, Clone)]
pub struct Problem {
    graph: Graph,
    a: IncidenceMatrix,
    b: DVector<f64>,
    x_true: Option<DVector<f64>>,
}

impl Problem {
    pub fn new(graph: Graph, b: DVector<f64>) -> Result<Self> {
        check_len("b", b.len(), graph.n_edges())?;
        if b.iter().any(|v| !v.is_finite()) {
            return Err(invalid("b", "measurements must be finite"));
        }
        let a = incidence_matrix(&graph);
        Ok(Self {
            graph,
            a,
            b,
            x_true: None,
        })
    }

    pub fn with_truth(mut self, x_true: DVector<f64>) -> Result<Self> {
        check_len("x_true", x_true.len(), self.graph.n_nodes())?;
        self.x_true = Some(x_true);
        Ok(self)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn incidence(&self) -> &IncidenceMatrix {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn x_true(&self) -> Option<&DVector<f64>> {
        self.x_true.as_ref()
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    pub fn n_edges(&self) -> usize {
        self.graph.n_edges()
    }

    /// `b - A x`.
    pub fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        self.a.residual(&self.b, x)
    }

    pub(crate) fn nqe_of(&self, x: &DVector<f64>) -> Option<f64> {
        let t = self.x_true.as_ref()?;
        crate::metrics::nqe(x.as_slice(), t.as_slice()).ok()
    }
}

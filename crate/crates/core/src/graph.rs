//! Measurement graphs and the linear algebra built on them: incidence
//! matrices, weighted Laplacians, Laplacian pseudo-inverses and spectral
//! norms.
//!
//! Nodes are 0-based everywhere. An edge is written `(v, u)` and its
//! incidence row carries `-1` at `v` and `+1` at `u`, so the measured
//! quantity on that edge is `x_u - x_v`. Edges generated from unordered
//! pairs put the smaller index at `u`.

use std::collections::{HashSet, VecDeque};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};

/// Relative eigenvalue cutoff used when pseudo-inverting a Laplacian.
pub const PINV_REL_CUTOFF: f64 = 1e-12;

/// Default relative tolerance for [`kernel_dimension`].
pub const KERNEL_REL_TOL: f64 = 1e-10;

/// An oriented edge `(v, u)`: `-1` at `minus = v`, `+1` at `plus = u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Edge {
    pub minus: usize,
    pub plus: usize,
}

impl Edge {
    pub fn new(v: usize, u: usize) -> Self {
        Self { minus: v, plus: u }
    }

    /// The endpoint that is not `node`. Panics if `node` is not an endpoint.
    pub fn other(&self, node: usize) -> usize {
        if node == self.minus {
            self.plus
        } else {
            assert_eq!(node, self.plus, "node {node} is not incident to {self:?}");
            self.minus
        }
    }

    /// Incidence coefficient of `node` on this edge (`+1`, `-1` or `0`).
    pub fn sign(&self, node: usize) -> f64 {
        if node == self.plus {
            1.0
        } else if node == self.minus {
            -1.0
        } else {
            0.0
        }
    }
}

impl From<[usize; 2]> for Edge {
    fn from(p: [usize; 2]) -> Self {
        Edge::new(p[0], p[1])
    }
}

impl From<Edge> for [usize; 2] {
    fn from(e: Edge) -> Self {
        [e.minus, e.plus]
    }
}

#[derive(Deserialize)]
struct RawGraph {
    n_nodes: usize,
    edges: Vec<Edge>,
}

/// Undirected simple graph with a fixed edge order and orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph")]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<Edge>,
}

impl TryFrom<RawGraph> for Graph {
    type Error = Error;

    fn try_from(raw: RawGraph) -> Result<Self> {
        Graph::new(raw.n_nodes, raw.edges)
    }
}

impl Graph {
    pub fn new(n_nodes: usize, edges: Vec<Edge>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            if e.minus >= n_nodes || e.plus >= n_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} = ({}, {}) references a node outside 0..{n_nodes}",
                    e.minus, e.plus
                )));
            }
            if e.minus == e.plus {
                return Err(Error::InvalidGraph(format!("edge {i} is a self-loop")));
            }
            let key = (e.minus.min(e.plus), e.minus.max(e.plus));
            if !seen.insert(key) {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} duplicates the pair {{{}, {}}}",
                    key.0, key.1
                )));
            }
        }
        Ok(Self { n_nodes, edges })
    }

    /// Builds a graph from `(v, u)` pairs.
    pub fn from_pairs(n_nodes: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(
            n_nodes,
            pairs.iter().map(|&(v, u)| Edge::new(v, u)).collect(),
        )
    }

    /// Complete graph, edges enumerated as `(j, i)` for `i < j` in lexicographic order.
    pub fn complete(n_nodes: usize) -> Self {
        let mut edges = Vec::with_capacity(n_nodes * n_nodes.saturating_sub(1) / 2);
        for i in 0..n_nodes {
            for j in i + 1..n_nodes {
                edges.push(Edge::new(j, i));
            }
        }
        Self { n_nodes, edges }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Incident edge indices for every node, each list in increasing edge order.
    pub fn incident_edges(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n_nodes];
        for (k, e) in self.edges.iter().enumerate() {
            inc[e.minus].push(k);
            inc[e.plus].push(k);
        }
        inc
    }

    pub fn has_edge_between(&self, a: usize, b: usize) -> bool {
        self.edges
            .iter()
            .any(|e| (e.minus == a && e.plus == b) || (e.minus == b && e.plus == a))
    }

    /// Number of connected components, by breadth-first traversal.
    pub fn components(&self) -> usize {
        let inc = self.incident_edges();
        let mut seen = vec![false; self.n_nodes];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.n_nodes {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for &k in &inc[v] {
                    let w = self.edges[k].other(v);
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        count
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn is_connected(g: &Graph) -> bool {
    g.components() == 1
}

/// The `|E| x N` incidence matrix, stored as its edge list. Products are
/// formed edge by edge; [`IncidenceMatrix::to_dense`] materializes it.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    edges: Vec<Edge>,
    n_nodes: usize,
}

pub fn incidence_matrix(g: &Graph) -> IncidenceMatrix {
    IncidenceMatrix {
        edges: g.edges().to_vec(),
        n_nodes: g.n_nodes(),
    }
}

impl IncidenceMatrix {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut dense = DMatrix::zeros(self.edges.len(), self.n_nodes);
        for (k, e) in self.edges.iter().enumerate() {
            dense[(k, e.plus)] = 1.0;
            dense[(k, e.minus)] = -1.0;
        }
        dense
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// `A x`, one entry `x_u - x_v` per edge.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.edges.len(),
            self.edges.iter().map(|e| x[e.plus] - x[e.minus]),
        )
    }

    /// `A^T y`, accumulated in edge order.
    pub fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n_nodes);
        for (k, e) in self.edges.iter().enumerate() {
            out[e.plus] += y[k];
            out[e.minus] -= y[k];
        }
        out
    }

    /// `b - A x`.
    pub fn residual(&self, b: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.edges.len(),
            self.edges
                .iter()
                .enumerate()
                .map(|(k, e)| b[k] - (x[e.plus] - x[e.minus])),
        )
    }

    /// `||A||_2`, from the largest eigenvalue of the unweighted Laplacian
    /// `A^T A`.
    pub fn spectral_norm(&self) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        let l = weighted_laplacian_unchecked(self, &vec![1.0; self.edges.len()]);
        let eig = SymmetricEigen::new(l.0);
        eig.eigenvalues
            .iter()
            .cloned()
            .fold(0.0_f64, f64::max)
            .sqrt()
    }
}

/// `L_W = A^T W A` for a diagonal `W` with strictly positive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLaplacian(DMatrix<f64>);

impl WeightedLaplacian {
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

pub fn weighted_laplacian(a: &IncidenceMatrix, w: &[f64]) -> Result<WeightedLaplacian> {
    check_len("edge weights", w.len(), a.n_edges())?;
    if let Some((k, &bad)) = w
        .iter()
        .enumerate()
        .find(|(_, &x)| !(x > 0.0) || !x.is_finite())
    {
        return Err(invalid(
            "weights",
            format!("weight of edge {k} is {bad}; weights must be finite and > 0"),
        ));
    }
    Ok(weighted_laplacian_unchecked(a, w))
}

pub(crate) fn weighted_laplacian_unchecked(a: &IncidenceMatrix, w: &[f64]) -> WeightedLaplacian {
    let n = a.n_nodes();
    let mut l = DMatrix::zeros(n, n);
    for (e, &we) in a.edges().iter().zip(w) {
        l[(e.plus, e.plus)] += we;
        l[(e.minus, e.minus)] += we;
        l[(e.plus, e.minus)] -= we;
        l[(e.minus, e.plus)] -= we;
    }
    WeightedLaplacian(l)
}

/// Moore-Penrose pseudo-inverse of a weighted Laplacian together with the
/// spectral information gathered while computing it.
#[derive(Debug, Clone)]
pub struct LaplacianPinv {
    pub matrix: DMatrix<f64>,
    /// Eigenvalues of the Laplacian, ascending.
    pub eigenvalues: Vec<f64>,
    /// Kernel dimension at [`KERNEL_REL_TOL`]; 1 for a connected graph.
    pub kernel_dim: usize,
}

impl LaplacianPinv {
    pub fn is_degenerate(&self) -> bool {
        self.kernel_dim > 1
    }
}

/// Pseudo-inverse by symmetric eigendecomposition, inverting eigenvalues above
/// `PINV_REL_CUTOFF * lambda_max`. A kernel of dimension above one is reported
/// in the result rather than treated as an error.
pub fn pinv_laplacian(l: &WeightedLaplacian) -> LaplacianPinv {
    let n = l.dim();
    let eig = SymmetricEigen::new(l.0.clone());
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = PINV_REL_CUTOFF * lmax;
    let mut pinv = DMatrix::zeros(n, n);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff {
            let v = eig.eigenvectors.column(i);
            pinv.ger(1.0 / lambda, &v, &v, 1.0);
        }
    }
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let kernel_dim = count_kernel(&eigenvalues, KERNEL_REL_TOL);
    LaplacianPinv {
        matrix: pinv,
        eigenvalues,
        kernel_dim,
    }
}

fn count_kernel(eigenvalues: &[f64], rel_tol: f64) -> usize {
    let lmax = eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let c = eigenvalues.iter().filter(|&&l| l <= rel_tol * lmax).count();
    // the zero matrix has a full kernel
    if lmax <= 0.0 {
        eigenvalues.len()
    } else {
        c
    }
}

/// Number of eigenvalues at most `rel_tol * lambda_max`.
pub fn kernel_dimension(l: &WeightedLaplacian, rel_tol: f64) -> usize {
    let eig = SymmetricEigen::new(l.0.clone());
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    count_kernel(&values, rel_tol)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example1() -> Graph {
        Graph::from_pairs(5, &[(1, 0), (4, 0), (2, 1), (4, 1), (3, 2), (4, 3)]).unwrap()
    }

    #[test]
    fn example1_incidence_matches_printed_matrix() {
        let a = incidence_matrix(&example1());
        #[rustfmt::skip]
        let printed = DMatrix::from_row_slice(6, 5, &[
            1.0, -1.0, 0.0, 0.0, 0.0,
            1.0, 0.0, 0.0, 0.0, -1.0,
            0.0, 1.0, -1.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0, -1.0,
            0.0, 0.0, 1.0, -1.0, 0.0,
            0.0, 0.0, 0.0, 1.0, -1.0,
        ]);
        assert_eq!(a.to_dense(), printed);
    }

    #[test]
    fn single_edge_incidence() {
        let g = Graph::from_pairs(2, &[(1, 0)]).unwrap();
        let a = incidence_matrix(&g);
        assert_eq!(a.to_dense(), DMatrix::from_row_slice(1, 2, &[1.0, -1.0]));
    }

    #[test]
    fn rejects_bad_graphs() {
        assert!(Graph::from_pairs(2, &[(0, 0)]).is_err());
        assert!(Graph::from_pairs(3, &[(1, 0), (0, 1)]).is_err());
        assert!(Graph::from_pairs(2, &[(2, 0)]).is_err());
        assert!(Graph::new(0, vec![]).is_err());
    }

    #[test]
    fn connectivity() {
        assert!(is_connected(&example1()));
        assert!(!is_connected(&Graph::from_pairs(3, &[(1, 0)]).unwrap()));
        assert!(is_connected(&Graph::new(1, vec![]).unwrap()));
    }

    #[test]
    fn single_edge_laplacian_and_pinv() {
        let g = Graph::from_pairs(2, &[(1, 0)]).unwrap();
        let a = incidence_matrix(&g);
        let l = weighted_laplacian(&a, &[1.0]).unwrap();
        assert_eq!(
            l.as_matrix(),
            &DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])
        );
        let p = pinv_laplacian(&l);
        let expected = DMatrix::from_row_slice(2, 2, &[0.25, -0.25, -0.25, 0.25]);
        assert_relative_eq!(p.matrix, expected, epsilon = 1e-14);
        assert_eq!(p.kernel_dim, 1);
    }

    #[test]
    fn uniform_weights_give_degree_laplacian() {
        let g = example1();
        let a = incidence_matrix(&g);
        let l = weighted_laplacian(&a, &[1.0; 6]).unwrap();
        let deg = [2.0, 3.0, 2.0, 2.0, 3.0];
        for (i, d) in deg.iter().enumerate() {
            assert_eq!(l.as_matrix()[(i, i)], *d);
        }
        for e in g.edges() {
            assert_eq!(l.as_matrix()[(e.plus, e.minus)], -1.0);
        }
    }

    #[test]
    fn laplacian_rejects_bad_weights() {
        let a = incidence_matrix(&example1());
        assert!(weighted_laplacian(&a, &[1.0; 5]).is_err());
        assert!(weighted_laplacian(&a, &[1.0, 1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
        assert!(weighted_laplacian(&a, &[1.0, 1.0, -2.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn kernel_dimension_counts_components() {
        let g = Graph::from_pairs(4, &[(1, 0), (3, 2)]).unwrap();
        let l = weighted_laplacian(&incidence_matrix(&g), &[1.0, 1.0]).unwrap();
        assert_eq!(kernel_dimension(&l, KERNEL_REL_TOL), 2);

        let a = incidence_matrix(&example1());
        let l = weighted_laplacian(&a, &[3.0, 0.5, 2.0, 7.0, 1.0, 1.0]).unwrap();
        assert_eq!(kernel_dimension(&l, KERNEL_REL_TOL), 1);
    }

    #[test]
    fn kernel_dimension_sees_vanishing_weights() {
        // path 0-1-2-3 with the middle edge numerically cut: eigenvalues are
        // {0, ~1e-30, 2, 2} up to rounding, so two fall below the cutoff
        let g = Graph::from_pairs(4, &[(1, 0), (2, 1), (3, 2)]).unwrap();
        let a = incidence_matrix(&g);
        let l = weighted_laplacian(&a, &[1.0, 1e-30, 1.0]).unwrap();
        assert_eq!(kernel_dimension(&l, KERNEL_REL_TOL), 2);
        let l = weighted_laplacian(&a, &[1e-30, 1e-30, 1.0]).unwrap();
        assert_eq!(kernel_dimension(&l, KERNEL_REL_TOL), 3);
        // the pinv drops the same directions
        assert_eq!(pinv_laplacian(&l).kernel_dim, 3);
    }

    #[test]
    fn spectral_norm_of_single_edge() {
        let a = incidence_matrix(&Graph::from_pairs(2, &[(1, 0)]).unwrap());
        assert_relative_eq!(a.spectral_norm(), 2f64.sqrt(), max_relative = 1e-14);
        let scaled = a.to_dense() * -3.5;
        assert_relative_eq!(
            spectral_norm(&scaled),
            3.5 * 2f64.sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn products_match_dense() {
        let a = incidence_matrix(&example1());
        let x = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.5, 0.25]);
        assert_relative_eq!(a.apply(&x), a.to_dense() * &x, epsilon = 1e-15);
        let y = DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5, 3.0, -2.0]);
        assert_relative_eq!(
            a.apply_transpose(&y),
            a.to_dense().transpose() * &y,
            epsilon = 1e-15
        );
    }

    #[test]
    fn json_round_trip_and_validation() {
        let g = example1();
        let s = g.to_json().unwrap();
        assert_eq!(
            s,
            r#"{"n_nodes":5,"edges":[[1,0],[4,0],[2,1],[4,1],[3,2],[4,3]]}"#
        );
        assert_eq!(Graph::from_json(&s).unwrap(), g);
        assert!(Graph::from_json(r#"{"n_nodes":2,"edges":[[1,1]]}"#).is_err());
    }
}

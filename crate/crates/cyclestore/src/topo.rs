//! Network graphs induced by connectivity matrices.
//!
//! Edge convention: `J[i][j]` is the weight from presynaptic neuron `j` onto
//! postsynaptic neuron `i`, so a nonzero entry gives the edge `j → i`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admit::LoopSpectra;
use crate::binmat::{self, CycleMatrix};
use crate::learn;

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopoError {
    #[error("cycle has duplicate rows {0:?}")]
    DuplicateRows(Vec<(usize, usize)>),
    #[error("cycle is not in standard form")]
    NotStandardForm,
    #[error("matrix is {rows}x{cols}, expected {n}x{n}")]
    Shape { rows: usize, cols: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Excitatory,
    Inhibitory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeSource {
    Transition,
    FixedPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    /// Presynaptic neuron.
    pub from: usize,
    /// Postsynaptic neuron.
    pub to: usize,
    pub weight: f64,
    pub polarity: Polarity,
    pub source: EdgeSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGraph {
    pub n: usize,
    pub edges: Vec<Edge>,
    /// Cluster label per node.
    pub clusters: Vec<usize>,
}

impl NetworkGraph {
    pub fn with_clusters(mut self, labels: Vec<usize>) -> Self {
        assert_eq!(labels.len(), self.n);
        self.clusters = labels;
        self
    }

    /// Presynaptic partners of `node`.
    pub fn inputs(&self, node: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.to == node).map(|e| e.from).collect()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }
}

fn edges_of(j: &DMatrix<f64>, tol: f64, include_self: bool, source: EdgeSource) -> Vec<Edge> {
    let mut edges = Vec::new();
    for i in 0..j.nrows() {
        for k in 0..j.ncols() {
            let w = j[(i, k)];
            if w.abs() >= tol && (include_self || i != k) {
                let polarity = if w > 0.0 { Polarity::Excitatory } else { Polarity::Inhibitory };
                edges.push(Edge { from: k, to: i, weight: w, polarity, source });
            }
        }
    }
    edges
}

pub fn extract_graph(j: &DMatrix<f64>, tol: f64, include_self: bool) -> NetworkGraph {
    assert_eq!(j.nrows(), j.ncols(), "connectivity must be square");
    NetworkGraph { n: j.nrows(), edges: edges_of(j, tol, include_self, EdgeSource::Transition), clusters: vec![0; j.nrows()] }
}

/// Adds the edges of `J⁰` (marked as fixed-point edges) to a graph.
pub fn add_fixed_point_edges(g: &mut NetworkGraph, j0: &DMatrix<f64>, tol: f64, include_self: bool) {
    g.edges.extend(edges_of(j0, tol, include_self, EdgeSource::FixedPoint));
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanionForm {
    /// Superdiagonal entries `c_i = J[i][i+1]`, each ±1.
    pub superdiagonal: Vec<i8>,
    /// Row signs with `s_1 = c_1` and `s_i = c_i s_{i−1}`.
    pub signs: Vec<i8>,
    /// Last row `a_1, …, a_N`.
    pub feedback: Vec<f64>,
    pub is_ring: bool,
}

/// Recognises the companion form: ±1 on the superdiagonal, a free last row, zeros elsewhere.
pub fn detect_companion(j: &DMatrix<f64>, tol: f64) -> Option<CompanionForm> {
    let n = j.nrows();
    if n == 0 || j.ncols() != n {
        return None;
    }
    let mut superdiagonal = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n - 1 {
        for k in 0..n {
            let w = j[(i, k)];
            if k == i + 1 {
                if (w - 1.0).abs() < 1e-9 {
                    superdiagonal.push(1);
                } else if (w + 1.0).abs() < 1e-9 {
                    superdiagonal.push(-1);
                } else {
                    return None;
                }
            } else if w.abs() >= tol {
                return None;
            }
        }
    }
    let mut signs = Vec::with_capacity(superdiagonal.len());
    for (i, &c) in superdiagonal.iter().enumerate() {
        signs.push(if i == 0 { c } else { c * signs[i - 1] });
    }
    let feedback: Vec<f64> = (0..n).map(|k| j[(n - 1, k)]).collect();
    let is_ring = ((feedback[0].abs() - 1.0).abs() < 1e-9) && feedback[1..].iter().all(|a| a.abs() < tol);
    Some(CompanionForm { superdiagonal, signs, feedback, is_ring })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStructure {
    /// Rows of each cluster (loop group).
    pub clusters: Vec<Vec<usize>>,
    /// Nonzero inter-cluster blocks of `J` or `J⁰` (symmetrised).
    pub direct_from_matrix: Vec<Vec<bool>>,
    /// Nontrivial intersection of loop spans.
    pub direct_from_spectra: Vec<Vec<bool>>,
    /// Components of the transitive closure of the direct-connection relation.
    pub connected: Vec<Vec<usize>>,
    /// Largest inter-cluster `|J_ij|`, `|J⁰_ij|`.
    pub max_inter_cluster: f64,
    pub block_diagonal: bool,
    /// `direct_from_matrix` equals `direct_from_spectra`.
    pub consistent: bool,
}

/// Clusters of a standard-form cycle without duplicate rows, and how they connect in `J`.
pub fn cluster_structure(sigma: &CycleMatrix, j: &DMatrix<f64>, tol: f64) -> Result<ClusterStructure, TopoError> {
    let n = sigma.n_rows();
    if j.nrows() != n || j.ncols() != n {
        return Err(TopoError::Shape { rows: j.nrows(), cols: j.ncols(), n });
    }
    let dups = sigma.duplicate_rows();
    if !dups.is_empty() {
        return Err(TopoError::DuplicateRows(dups));
    }
    if !binmat::is_standard_form(sigma) {
        return Err(TopoError::NotStandardForm);
    }
    let ls = LoopSpectra::new(sigma);
    let clusters: Vec<Vec<usize>> = ls.decomposition.groups.iter().map(|g| g.rows()).collect();
    let r = clusters.len();
    let j0 = learn::learn_j0(sigma);
    let dims = ls.intersection_dims();
    let mut direct_from_matrix = vec![vec![false; r]; r];
    let mut max_inter = 0.0f64;
    for a in 0..r {
        for b in 0..r {
            if a == b {
                continue;
            }
            let mut m = 0.0f64;
            for &i in &clusters[a] {
                for &k in &clusters[b] {
                    m = m.max(j[(i, k)].abs()).max(j0[(i, k)].abs());
                }
            }
            max_inter = max_inter.max(m);
            if m >= tol {
                direct_from_matrix[a][b] = true;
                direct_from_matrix[b][a] = true;
            }
        }
    }
    let direct_from_spectra: Vec<Vec<bool>> =
        (0..r).map(|a| (0..r).map(|b| a != b && dims[a][b] > 0).collect()).collect();
    let connected = components(&direct_from_matrix);
    Ok(ClusterStructure {
        clusters,
        consistent: direct_from_matrix == direct_from_spectra,
        direct_from_matrix,
        direct_from_spectra,
        connected,
        max_inter_cluster: max_inter,
        block_diagonal: max_inter < tol,
    })
}

fn components(adj: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let r = adj.len();
    let mut seen = vec![false; r];
    let mut out = Vec::new();
    for start in 0..r {
        if seen[start] {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(a) = stack.pop() {
            comp.insert(a);
            for b in 0..r {
                if adj[a][b] && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        out.push(comp.into_iter().collect());
    }
    out
}

/// GraphViz DOT. Nodes are numbered from 1; excitatory edges red, inhibitory blue,
/// fixed-point edges dashed; one `cluster_k` subgraph per cluster label.
pub fn export_dot(g: &NetworkGraph) -> String {
    let mut s = String::from("digraph network {\n");
    let labels: BTreeSet<usize> = g.clusters.iter().copied().collect();
    for c in &labels {
        let _ = writeln!(s, "  subgraph cluster_{c} {{");
        let _ = writeln!(s, "    label=\"cluster {}\";", c + 1);
        for (i, _) in g.clusters.iter().enumerate().filter(|(_, &l)| l == *c) {
            let _ = writeln!(s, "    n{};", i + 1);
        }
        s.push_str("  }\n");
    }
    for e in &g.edges {
        let color = match e.polarity {
            Polarity::Excitatory => "red",
            Polarity::Inhibitory => "blue",
        };
        let style = match e.source {
            EdgeSource::Transition => "",
            EdgeSource::FixedPoint => ", style=dashed",
        };
        let _ = writeln!(s, "  n{} -> n{} [color={color}, label=\"{}\"{style}];", e.from + 1, e.to + 1, e.weight);
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix_has_no_edges() {
        let g = extract_graph(&DMatrix::zeros(4, 4), DEFAULT_TOL, true);
        assert!(g.edges.is_empty());
        let dot = export_dot(&g);
        assert!(dot.starts_with("digraph network {") && dot.ends_with("}\n"));
    }

    #[test]
    fn self_loops_dropped_by_default() {
        let j = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.0, 0.5]);
        let g = extract_graph(&j, DEFAULT_TOL, false);
        assert_eq!(g.edges.len(), 1);
        assert_eq!((g.edges[0].from, g.edges[0].to, g.edges[0].polarity), (1, 0, Polarity::Inhibitory));
        assert_eq!(extract_graph(&j, DEFAULT_TOL, true).edges.len(), 3);
    }

    #[test]
    fn companion_of_transposed_permutation() {
        let j = learn::transition_matrix(5).transpose();
        let c = detect_companion(&j, DEFAULT_TOL).unwrap();
        assert!(c.is_ring);
        assert_eq!(c.signs, vec![1; 4]);
        assert_eq!(c.feedback[0], 1.0);
        let g = extract_graph(&j, DEFAULT_TOL, false);
        assert_eq!(g.edges.len(), 5);
        assert_eq!(export_dot(&g).matches("->").count(), 5);
    }

    #[test]
    fn non_unit_superdiagonal_rejected() {
        let j = DMatrix::from_row_slice(2, 2, &[0.0, 0.999, 1.0, 0.0]);
        assert!(detect_companion(&j, DEFAULT_TOL).is_none());
    }
}

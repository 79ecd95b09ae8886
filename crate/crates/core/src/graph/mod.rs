//! Snapshot graphs, dynamic graphs and the adjacency preprocessing used by
//! the graph-convolution encoder.
//!
//! Weights are stored densely. Every node in a snapshot has a local index
//! `0..n` and an external identifier; node sets may differ between snapshots.

mod io;
mod synth;
mod union_find;

pub use io::{load_dynamic_graph, load_snapshot, write_dynamic_graph, write_snapshot};
pub use synth::{bridge_scenario, gaussian_partition_graph, perturb_bridge, PartitionParams};
pub use union_find::DisjointSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Weighted undirected graph at one time step.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotGraph {
    node_ids: Vec<String>,
    weights: DMatrix<f64>,
    labels: Option<Vec<usize>>,
}

impl SnapshotGraph {
    /// Builds a snapshot from a dense weight matrix, checking symmetry, zero
    /// diagonal, non-negativity and id uniqueness.
    pub fn new(
        node_ids: Vec<String>,
        weights: DMatrix<f64>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = node_ids.len();
        if weights.nrows() != n || weights.ncols() != n {
            return Err(Error::Validation(format!(
                "weight matrix is {}x{} but there are {n} node ids",
                weights.nrows(),
                weights.ncols()
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(n);
        for id in &node_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Validation(format!("duplicate node id {id}")));
            }
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::Validation(format!("self-loop on node {}", node_ids[i])));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Validation(format!(
                        "weight {w} between {} and {} is not a non-negative number",
                        node_ids[i], node_ids[j]
                    )));
                }
                if w != weights[(j, i)] {
                    return Err(Error::Validation("weight matrix is not symmetric".into()));
                }
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::Validation(format!(
                    "{} labels for {n} nodes",
                    l.len()
                )));
            }
        }
        Ok(Self { node_ids, weights, labels })
    }

    /// Builds a snapshot from an undirected edge list over local indices.
    /// Duplicate edges have their weights summed.
    pub fn from_edges(
        node_ids: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = node_ids.len();
        let mut weights = DMatrix::zeros(n, n);
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::Validation(format!("edge ({u}, {v}) out of range for {n} nodes")));
            }
            if u == v {
                return Err(Error::Validation(format!("self-loop on node {}", node_ids[u])));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Validation(format!("negative or non-finite weight {w}")));
            }
            weights[(u, v)] += w;
            weights[(v, u)] += w;
        }
        Self::new(node_ids, weights, labels)
    }

    /// Snapshot with node ids `"0".."n-1"`.
    pub fn with_numeric_ids(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        Self::from_edges((0..n).map(|i| i.to_string()).collect(), edges, labels)
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.weights[(u, v)]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.node_count() {
                return Err(Error::Validation(format!(
                    "{} labels for {} nodes",
                    l.len(),
                    self.node_count()
                )));
            }
        }
        self.labels = labels;
        Ok(self)
    }

    /// Undirected edges `(u, v, w)` with `u < v` and `w > 0`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.node_count();
        let mut out = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let w = self.weights[(u, v)];
                if w > 0.0 {
                    out.push((u, v, w));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Σ_i Σ_j W_ij over the full symmetric matrix, so every undirected edge
    /// is counted twice. The community network normalizes by the same sum.
    pub fn total_edge_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weighted degree of every node.
    pub fn degrees(&self) -> Vec<f64> {
        self.weights.row_iter().map(|r| r.sum()).collect()
    }

    /// Connected components as a per-node component id (ids are root indices).
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut uf = DisjointSet::new(n);
        for (u, v, _) in self.edges() {
            uf.union(u, v);
        }
        (0..n).map(|i| uf.find(i)).collect()
    }

    pub fn component_count(&self) -> usize {
        let mut roots = self.components();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// Â = D^{-1/2}(A+I)D^{-1/2} with D the degree matrix of A+I.
    pub fn normalized_adjacency(&self) -> NormalizedAdjacency {
        let n = self.node_count();
        let inv_sqrt: Vec<f64> = self
            .degrees()
            .into_iter()
            .map(|d| 1.0 / (d + 1.0).sqrt())
            .collect();
        let mut m = self.weights.clone();
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
            }
        }
        NormalizedAdjacency { matrix: m }
    }
}

/// Free-function form of [`SnapshotGraph::total_edge_weight`].
pub fn total_edge_weight(g: &SnapshotGraph) -> f64 {
    g.total_edge_weight()
}

/// Free-function form of [`SnapshotGraph::normalized_adjacency`].
pub fn normalized_adjacency(g: &SnapshotGraph) -> NormalizedAdjacency {
    g.normalized_adjacency()
}

/// Symmetrically normalized adjacency with self-loops.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedAdjacency {
    matrix: DMatrix<f64>,
}

impl NormalizedAdjacency {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Ordered sequence of snapshots.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicGraph {
    snapshots: Vec<SnapshotGraph>,
}

impl DynamicGraph {
    pub fn new(snapshots: Vec<SnapshotGraph>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::Validation("dynamic graph needs at least one snapshot".into()));
        }
        Ok(Self { snapshots })
    }

    pub fn snapshots(&self) -> &[SnapshotGraph] {
        &self.snapshots
    }

    pub fn snapshot(&self, t: usize) -> &SnapshotGraph {
        &self.snapshots[t]
    }

    /// Number of snapshots.
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Index of the last snapshot (snapshots are numbered `0..=steps`).
    pub fn steps(&self) -> usize {
        self.snapshots.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> SnapshotGraph {
        SnapshotGraph::with_numeric_ids(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], None).unwrap()
    }

    #[test]
    fn rejects_self_loops_and_negative_weights() {
        assert!(SnapshotGraph::with_numeric_ids(2, [(0, 0, 1.0)], None).is_err());
        assert!(SnapshotGraph::with_numeric_ids(2, [(0, 1, -1.0)], None).is_err());
        let ids = vec!["a".to_string(), "a".to_string()];
        assert!(SnapshotGraph::from_edges(ids, [(0, 1, 1.0)], None).is_err());
    }

    #[test]
    fn duplicate_edges_sum() {
        let g = SnapshotGraph::with_numeric_ids(2, [(0, 1, 1.0), (1, 0, 1.0)], None).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight(0, 1), 2.0);
    }

    #[test]
    fn total_weight_double_counts() {
        assert_eq!(triangle().total_edge_weight(), 6.0);
        let empty = SnapshotGraph::with_numeric_ids(3, [], None).unwrap();
        assert_eq!(empty.total_edge_weight(), 0.0);
    }

    #[test]
    fn normalized_adjacency_small_cases() {
        let single = SnapshotGraph::with_numeric_ids(1, [], None).unwrap();
        assert_eq!(single.normalized_adjacency().matrix()[(0, 0)], 1.0);

        let pair = SnapshotGraph::with_numeric_ids(2, [(0, 1, 1.0)], None).unwrap();
        let a = pair.normalized_adjacency();
        for v in a.matrix().iter() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn normalized_adjacency_pattern_matches_a_plus_i() {
        let g = SnapshotGraph::with_numeric_ids(4, [(0, 1, 2.0), (2, 3, 0.5)], None).unwrap();
        let a = g.normalized_adjacency();
        for i in 0..4 {
            for j in 0..4 {
                let expected_nonzero = i == j || g.weight(i, j) > 0.0;
                assert_eq!(a.matrix()[(i, j)] != 0.0, expected_nonzero);
                assert_eq!(a.matrix()[(i, j)], a.matrix()[(j, i)]);
            }
        }
    }

    #[test]
    fn components_of_disjoint_edges() {
        let g = SnapshotGraph::with_numeric_ids(4, [(0, 1, 1.0), (2, 3, 1.0)], None).unwrap();
        assert_eq!(g.component_count(), 2);
        assert_eq!(triangle().component_count(), 1);
    }
}

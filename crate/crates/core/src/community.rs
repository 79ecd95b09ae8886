//! Differentiable community networks.
//!
//! With pseudo-labels `s_i = argmax_k Q_ik` and the filtered assignment
//! `Q̂_ik = Q_ik · 1(s_i = k)`, the community network is
//! `M = Q̂ᵀ·W·Q̂ / Σ_ij W_ij`. The argmax mask is a constant during
//! differentiation; gradients reach only the surviving entries.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::SnapshotGraph;
use crate::mfc::hard_labels;
use crate::tensor::{Matrix, Tape, Var};

/// `n × K` indicator of each row's argmax.
pub fn argmax_mask(labels: &[usize], k: usize) -> Matrix {
    let mut mask = Matrix::zeros(labels.len(), k);
    for (i, &l) in labels.iter().enumerate() {
        mask[(i, l)] = 1.0;
    }
    mask
}

/// Pseudo-labels and `Q̂ = Q ⊙ 1(S = k)` as plain values.
pub fn filtered_assignment(q: &Matrix) -> (Vec<usize>, Matrix) {
    let labels = hard_labels(q);
    let mask = argmax_mask(&labels, q.ncols());
    let filtered = q.component_mul(&mask);
    (labels, filtered)
}

/// Records `soft ⊙ mask` on the tape, with `mask` built from `labels`.
pub fn filter_on_tape(tape: &mut Tape, soft: Var, labels: &[usize]) -> Result<Var> {
    let (n, k) = tape.shape(soft);
    if labels.len() != n {
        return Err(Error::shape("filter", format!("{} labels for {n} rows", labels.len())));
    }
    let mask = tape.leaf(argmax_mask(labels, k))?;
    tape.mul(soft, mask)
}

/// Records `M = Q̂ᵀ·W·Q̂ / ΣW` on the tape.
pub fn community_adjacency_on_tape(tape: &mut Tape, q_hat: Var, g: &SnapshotGraph) -> Result<Var> {
    let n = tape.shape(q_hat).0;
    if n != g.node_count() {
        return Err(Error::shape(
            "community_adjacency",
            format!("{n} assignment rows for {} nodes", g.node_count()),
        ));
    }
    let total = g.total_edge_weight();
    if total <= 0.0 {
        return Err(Error::Degenerate("community network of a graph without edges".into()));
    }
    let w = tape.leaf(g.weights().clone())?;
    let qt = tape.transpose(q_hat)?;
    let wq = tape.matmul(w, q_hat)?;
    let raw = tape.matmul(qt, wq)?;
    tape.scale(raw, 1.0 / total)
}

/// Community-level network of a snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct CommunityNetwork {
    /// `K × K`, symmetric, non-negative.
    pub m: Matrix,
    /// Communities that received at least one node.
    pub active: Vec<bool>,
}

impl CommunityNetwork {
    pub fn k(&self) -> usize {
        self.m.nrows()
    }

    pub fn from_labels(m: Matrix, labels: &[usize]) -> Self {
        let mut active = vec![false; m.nrows()];
        for &l in labels {
            active[l] = true;
        }
        Self { m, active }
    }

    /// Every community active.
    pub fn from_matrix(m: Matrix) -> Self {
        let active = vec![true; m.nrows()];
        Self { m, active }
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    /// `K` followed by `k l weight` for `k ≤ l`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.k());
        for k in 0..self.k() {
            for l in k..self.k() {
                writeln!(out, "{k}\t{l}\t{}", self.m[(k, l)]).expect("string write");
            }
        }
        out
    }
}

/// Community network of a fixed assignment matrix (no tape).
pub fn community_adjacency(q: &Matrix, g: &SnapshotGraph) -> Result<CommunityNetwork> {
    let (labels, filtered) = filtered_assignment(q);
    let mut tape = Tape::new();
    let q_hat = tape.leaf(filtered)?;
    let m = community_adjacency_on_tape(&mut tape, q_hat, g)?;
    Ok(CommunityNetwork::from_labels(tape.value(m).clone(), &labels))
}

/// Records the network built from the non-negative part of the raw
/// assignment scores, filtered by `labels`.
///
/// The min-max normalized assignment is exactly 1 at every row maximum, so
/// a network built from it carries no gradient back to the model. The raw
/// scores keep that path open while sharing the same argmax.
pub fn score_network_on_tape(
    tape: &mut Tape,
    raw: Var,
    labels: &[usize],
    g: &SnapshotGraph,
) -> Result<Var> {
    let soft = tape.relu(raw)?;
    let q_hat = filter_on_tape(tape, soft, labels)?;
    community_adjacency_on_tape(tape, q_hat, g)
}

/// [`score_network_on_tape`] on plain values, with labels from `q`.
pub fn score_network(raw: &Matrix, q: &Matrix, g: &SnapshotGraph) -> Result<CommunityNetwork> {
    let labels = hard_labels(q);
    let mut tape = Tape::new();
    let raw = tape.leaf(raw.clone())?;
    let m = score_network_on_tape(&mut tape, raw, &labels, g)?;
    Ok(CommunityNetwork::from_labels(tape.value(m).clone(), &labels))
}

/// `∂L/∂Q̂ = W·Q̂·(G + Gᵀ) / ΣW` restricted to the argmax mask, for an
/// upstream gradient `G = ∂L/∂M`.
pub fn community_gradient(
    dl_dm: &Matrix,
    q_hat: &Matrix,
    mask: &Matrix,
    g: &SnapshotGraph,
) -> Result<Matrix> {
    let total = g.total_edge_weight();
    if total <= 0.0 {
        return Err(Error::Degenerate("community network of a graph without edges".into()));
    }
    let sym = dl_dm + dl_dm.transpose();
    let grad = g.weights() * q_hat * sym / total;
    Ok(grad.component_mul(mask))
}

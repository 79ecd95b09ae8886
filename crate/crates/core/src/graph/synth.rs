//! Seeded synthetic scenarios: Gaussian random partition graphs and
//! transient bridge perturbations between two planted clusters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{DynamicGraph, SnapshotGraph};
use crate::error::{Error, Result};

/// Parameters of a Gaussian random partition graph.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionParams {
    pub k: usize,
    pub size_mean: f64,
    pub size_std: f64,
    pub p_in: f64,
    pub p_out: f64,
}

impl Default for PartitionParams {
    fn default() -> Self {
        Self {
            k: 5,
            size_mean: 20.0,
            size_std: 1.0,
            p_in: 0.5,
            p_out: 0.001,
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Validation(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

/// Draws `k` cluster sizes from N(mean, std²) (rounded, at least 2) and wires
/// intra-cluster pairs with probability `p_in`, inter-cluster pairs with
/// `p_out`. Labels are the cluster ids; nodes are numbered cluster by cluster.
pub fn gaussian_partition_graph(params: &PartitionParams, seed: u64) -> Result<SnapshotGraph> {
    let PartitionParams { k, size_mean, size_std, p_in, p_out } = *params;
    if k < 2 {
        return Err(Error::Validation(format!("need at least 2 clusters, got {k}")));
    }
    if !(size_mean >= 2.0) || !(size_std >= 0.0) {
        return Err(Error::Validation(format!(
            "cluster size distribution N({size_mean}, {size_std}^2) is degenerate"
        )));
    }
    check_probability("p_in", p_in)?;
    check_probability("p_out", p_out)?;
    if p_out > p_in {
        return Err(Error::Validation(format!("p_out {p_out} exceeds p_in {p_in}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(size_mean, size_std)
        .map_err(|e| Error::Validation(format!("size distribution: {e}")))?;
    let labels: Vec<usize> = (0..k)
        .flat_map(|c| {
            let size = normal.sample(&mut rng).round().max(2.0) as usize;
            std::iter::repeat_n(c, size)
        })
        .collect();

    let n = labels.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((u, v, 1.0));
            }
        }
    }
    SnapshotGraph::with_numeric_ids(n, edges, Some(labels))
}

/// Copy of `g` where every absent pair between clusters `c1` and `c2` gains
/// a unit edge with probability `p_add`.
pub fn perturb_bridge(
    g: &SnapshotGraph,
    c1: usize,
    c2: usize,
    p_add: f64,
    seed: u64,
) -> Result<SnapshotGraph> {
    check_probability("p_add", p_add)?;
    let labels = g
        .labels()
        .ok_or_else(|| Error::Validation("bridge perturbation needs labels".into()))?;
    if c1 == c2 {
        return Err(Error::Validation("bridge endpoints must be distinct clusters".into()));
    }
    for c in [c1, c2] {
        if !labels.contains(&c) {
            return Err(Error::Validation(format!("unknown label {c}")));
        }
    }
    let members = |c: usize| -> Vec<usize> {
        labels.iter().enumerate().filter(|(_, &l)| l == c).map(|(i, _)| i).collect()
    };
    let (left, right) = (members(c1), members(c2));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = g.weights().clone();
    for &u in &left {
        for &v in &right {
            if weights[(u, v)] == 0.0 && rng.random::<f64>() < p_add {
                weights[(u, v)] = 1.0;
                weights[(v, u)] = 1.0;
            }
        }
    }
    SnapshotGraph::new(g.node_ids().to_vec(), weights, Some(labels.to_vec()))
}

/// Three snapshots of one partition graph where the middle one gains a
/// bridge between clusters 0 and 1.
pub fn bridge_scenario(params: &PartitionParams, p_add: f64, seed: u64) -> Result<DynamicGraph> {
    let base = gaussian_partition_graph(params, seed)?;
    let bridged = perturb_bridge(&base, 0, 1, p_add, seed.wrapping_add(100))?;
    DynamicGraph::new(vec![base.clone(), bridged, base])
}

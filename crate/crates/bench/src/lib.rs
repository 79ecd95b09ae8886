//! Fixtures shared by the criterion benches.

use toporeg::community::CommunityNetwork;
use toporeg::graph::{gaussian_partition_graph, PartitionParams};
use toporeg::tda::{compute_persistence, wrcf_filtration};
use toporeg::topo_loss::ComparisonDiagram;
use toporeg::{Matrix, SnapshotGraph};

/// Dense community network on `k` communities with scrambled, mostly
/// distinct weights.
pub fn scrambled_network(k: usize, salt: usize) -> CommunityNetwork {
    let mut m = Matrix::zeros(k, k);
    for u in 0..k {
        for v in (u + 1)..k {
            let w = ((u * 7919 + v * 104_729 + salt * 31) % 997) as f64 + 1.0;
            m[(u, v)] = w;
            m[(v, u)] = w;
        }
    }
    CommunityNetwork::from_matrix(m)
}

/// Both comparison diagrams of a scrambled network.
pub fn scrambled_diagrams(k: usize, salt: usize) -> Vec<ComparisonDiagram> {
    let f = wrcf_filtration(&scrambled_network(k, salt)).expect("valid network");
    let d = compute_persistence(&f).expect("valid filtration");
    (0..2).map(|dim| ComparisonDiagram::from_persistence(&f, &d, dim)).collect()
}

/// Five-cluster partition graph of about `5 * size` nodes.
pub fn partition_graph(size: f64, seed: u64) -> SnapshotGraph {
    let params = PartitionParams { size_mean: size, ..Default::default() };
    gaussian_partition_graph(&params, seed).expect("valid parameters")
}

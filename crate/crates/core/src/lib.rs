//! Topology-regularized dynamic community detection.
//!
//! Each snapshot of a dynamic graph is embedded by a one-layer graph
//! auto-encoder and clustered by a matrix-factorization head whose soft
//! assignment is `Q = g(Z C†)`. From `Q` a differentiable community network
//! is built, filtered by descending edge weight (weight rank clique
//! filtration), and summarized by its 0- and 1-dimensional persistence
//! diagrams. A Wasserstein loss between diagrams of neighbouring snapshots
//! is routed back through the persistence pairing to the encoder and the
//! cluster centers.
//!
//! Module map:
//!
//! * [`graph`]: snapshot data model, file formats, synthetic scenarios
//! * [`tensor`]: reverse-mode differentiation over dense matrices, Adam
//! * [`gae`]: graph-convolution encoder and inner-product decoder
//! * [`mfc`]: matrix-factorization clustering head
//! * [`community`]: community networks from assignments
//! * [`tda`]: filtration, persistence, inverse map
//! * [`topo_loss`]: diagram Wasserstein distance and temporal loss
//! * [`metrics`]: ACC / NMI / ARI / modularity and k-means
//! * [`pipeline`]: two-stage training, evaluation and exports

// Validation uses `!(x >= 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod community;
pub mod error;
pub mod gae;
pub mod graph;
pub mod metrics;
pub mod mfc;
pub mod pipeline;
pub mod tda;
pub mod tensor;
pub mod topo_loss;

pub use error::{Error, Result};
pub use graph::{DynamicGraph, NormalizedAdjacency, SnapshotGraph};
pub use tensor::{Matrix, Tape, Var};

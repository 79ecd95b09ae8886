//! Weight rank clique filtrations of community networks and their
//! persistence in dimensions 0 and 1.

mod cliques;
mod filtration;
pub mod oracle;
mod persistence;

pub use cliques::maximal_cliques;
pub use filtration::{wrcf_filtration, Filtration, Simplex};
pub use persistence::{
    comparison_points, compute_persistence, diagram_to_text, inverse_map,
    zero_dim_pairs_union_find, Attribution, BoundaryMatrix, DiagramPoint, PersistenceDiagram,
    PersistencePair, ESSENTIAL_CAP,
};

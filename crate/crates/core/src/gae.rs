//! One-layer graph-convolution auto-encoder.
//!
//! The encoder is linear, `Z = Â·X·W`; the decoder is `σ(Z·Zᵀ)`. Snapshots
//! are featureless by default, so `X` is the identity and the product
//! reduces to `Â·W`.

use crate::error::{Error, Result};
use crate::graph::SnapshotGraph;
use crate::tensor::{glorot_init, Matrix, Tape, Var};

pub const DEFAULT_EMBED_DIM: usize = 30;

/// Node feature input to the encoder.
#[derive(Clone, Copy, Debug)]
pub enum Features {
    /// One-hot node features (`X = I`).
    Identity,
    Dense(Var),
}

/// Trainable encoder weight, `input_dim × embed_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub weight: Matrix,
}

impl EncoderParams {
    pub fn glorot(input_dim: usize, embed_dim: usize, seed: u64) -> Self {
        Self { weight: glorot_init(input_dim, embed_dim, seed) }
    }

    pub fn embed_dim(&self) -> usize {
        self.weight.ncols()
    }
}

/// `Z = Â·X·W` (linear output).
pub fn encode(tape: &mut Tape, a_hat: Var, features: Features, weight: Var) -> Result<Var> {
    let (n, n2) = tape.shape(a_hat);
    if n != n2 {
        return Err(Error::shape("encode", "normalized adjacency is not square"));
    }
    let propagated = match features {
        Features::Identity => {
            if tape.shape(weight).0 != n {
                return Err(Error::shape(
                    "encode",
                    format!("identity features need {n} weight rows, got {}", tape.shape(weight).0),
                ));
            }
            return tape.matmul(a_hat, weight);
        }
        Features::Dense(x) => {
            if tape.shape(x).0 != n {
                return Err(Error::shape("encode", "feature rows differ from node count"));
            }
            tape.matmul(a_hat, x)?
        }
    };
    tape.matmul(propagated, weight)
}

/// Inner-product logits `Z·Zᵀ`.
pub fn decode_logits(tape: &mut Tape, z: Var) -> Result<Var> {
    let zt = tape.transpose(z)?;
    tape.matmul(z, zt)
}

/// Reconstructed adjacency `σ(Z·Zᵀ)`.
pub fn decode(tape: &mut Tape, z: Var) -> Result<Var> {
    let logits = decode_logits(tape, z)?;
    tape.sigmoid(logits)
}

/// Binarized reconstruction target with its positive-class weight.
#[derive(Clone, Debug)]
pub struct ReconstructionTarget {
    target: Matrix,
    pos_weight: f64,
}

impl ReconstructionTarget {
    /// Target `A + I` with `A_ij = 1` where `w_ij > 0`; positives are weighted
    /// by `(n² − |pos|)/|pos|`.
    pub fn from_graph(g: &SnapshotGraph) -> Result<Self> {
        if g.edge_count() == 0 {
            return Err(Error::Degenerate("reconstruction target has no edges".into()));
        }
        let n = g.node_count();
        let target = Matrix::from_fn(n, n, |i, j| {
            if i == j || g.weight(i, j) > 0.0 {
                1.0
            } else {
                0.0
            }
        });
        let positives = target.sum();
        let total = (n * n) as f64;
        let pos_weight = if positives < total { (total - positives) / positives } else { 1.0 };
        Ok(Self { target, pos_weight })
    }

    pub fn with_pos_weight(mut self, pos_weight: f64) -> Self {
        self.pos_weight = pos_weight;
        self
    }

    pub fn pos_weight(&self) -> f64 {
        self.pos_weight
    }

    pub fn target(&self) -> &Matrix {
        &self.target
    }
}

/// Mean weighted binary cross-entropy between the target and `σ(Z·Zᵀ)`.
pub fn reconstruction_loss(tape: &mut Tape, target: &ReconstructionTarget, z: Var) -> Result<Var> {
    let logits = decode_logits(tape, z)?;
    tape.weighted_bce_with_logits(logits, target.target.clone(), target.pos_weight)
}

//! Matrix-factorization clustering head trained jointly with the GAE.
//!
//! Forward pass per epoch:
//!
//! ```text
//! Z      = Â·W
//! Q_raw  = Z · Cᵀ(CCᵀ + λI)⁻¹
//! Q      = row_minmax(Q_raw)
//! L      = L_gae(Z) + α · MSE(Z, Q·C)
//! ```
//!
//! `W` and `C` are updated by Adam; `Q` is never a parameter.

use crate::error::{Error, Result};
use crate::gae::{encode, reconstruction_loss, EncoderParams, Features, ReconstructionTarget};
use crate::graph::SnapshotGraph;
use crate::metrics::kmeans;
use crate::tensor::{regularized_pinv, Adam, AdamConfig, Matrix, Tape, Var};

/// Trainable `K × embed_dim` cluster centers.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterCenters {
    pub centers: Matrix,
}

impl ClusterCenters {
    pub fn k(&self) -> usize {
        self.centers.nrows()
    }
}

/// Soft assignment before and after row min-max normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `Z·C†`.
    pub raw: Matrix,
    /// Row-normalized `g(Z·C†)`.
    pub q: Matrix,
}

impl Assignment {
    pub fn hard_labels(&self) -> Vec<usize> {
        hard_labels(&self.q)
    }
}

/// Row argmax, ties to the lowest column.
pub fn hard_labels(q: &Matrix) -> Vec<usize> {
    q.row_iter()
        .map(|row| {
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// `(Q_raw, Q)` with `Q = g(Z·C†)`.
pub fn compute_assignment(tape: &mut Tape, z: Var, c: Var, lambda: f64) -> Result<(Var, Var)> {
    let pinv = regularized_pinv(tape, c, lambda)?;
    let raw = tape.matmul(z, pinv)?;
    let q = tape.row_minmax(raw)?;
    Ok((raw, q))
}

/// `MSE(Z, Q·C)` with `Q` already normalized.
pub fn clustering_loss(tape: &mut Tape, z: Var, q: Var, c: Var) -> Result<Var> {
    let recon = tape.matmul(q, c)?;
    tape.mse(z, recon)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MfcConfig {
    pub k: usize,
    pub embed_dim: usize,
    pub alpha: f64,
    /// Total epochs, warm-up included.
    pub epochs: usize,
    /// Leading epochs that optimize the reconstruction loss alone.
    pub warmup_epochs: usize,
    pub lr: f64,
    pub lambda: f64,
    pub seed: u64,
    /// Stop when the relative change of the total loss over `patience`
    /// epochs falls below this.
    pub tol: f64,
    pub patience: usize,
}

impl Default for MfcConfig {
    fn default() -> Self {
        Self {
            k: 5,
            embed_dim: crate::gae::DEFAULT_EMBED_DIM,
            alpha: 10.0,
            epochs: 500,
            warmup_epochs: 200,
            lr: 1e-3,
            lambda: 1e-6,
            seed: 0,
            tol: 1e-6,
            patience: 10,
        }
    }
}

/// Variables of one recorded forward pass.
#[derive(Clone, Copy, Debug)]
pub struct Forward {
    pub weight: Var,
    pub centers: Var,
    pub z: Var,
    pub raw: Var,
    pub q: Var,
    pub gae_loss: Var,
    pub cluster_loss: Var,
}

/// Loss components of one optimization step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepLosses {
    pub gae: f64,
    pub cluster: f64,
    pub topo: f64,
    pub total: f64,
}

/// GAE encoder plus MFC head for one snapshot.
#[derive(Clone, Debug)]
pub struct SnapshotModel {
    a_hat: Matrix,
    target: ReconstructionTarget,
    pub encoder: EncoderParams,
    pub centers: ClusterCenters,
    lambda: f64,
    optim_weight: Adam,
    optim_centers: Adam,
}

impl SnapshotModel {
    /// Glorot-initialized encoder; centers are zero until
    /// [`init_centers`](Self::init_centers) runs.
    pub fn new(g: &SnapshotGraph, cfg: &MfcConfig) -> Result<Self> {
        if cfg.k < 2 {
            return Err(Error::Validation(format!("need K >= 2 clusters, got {}", cfg.k)));
        }
        if cfg.embed_dim < cfg.k {
            return Err(Error::Rank { embed_dim: cfg.embed_dim, k: cfg.k });
        }
        if g.node_count() < cfg.k {
            return Err(Error::Validation(format!(
                "{} nodes cannot form {} clusters",
                g.node_count(),
                cfg.k
            )));
        }
        let n = g.node_count();
        let adam = AdamConfig { lr: cfg.lr, ..Default::default() };
        Ok(Self {
            a_hat: g.normalized_adjacency().matrix().clone(),
            target: ReconstructionTarget::from_graph(g)?,
            encoder: EncoderParams::glorot(n, cfg.embed_dim, cfg.seed),
            centers: ClusterCenters { centers: Matrix::zeros(cfg.k, cfg.embed_dim) },
            lambda: cfg.lambda,
            optim_weight: Adam::new(adam, &[(n, cfg.embed_dim)]),
            optim_centers: Adam::new(adam, &[(cfg.k, cfg.embed_dim)]),
        })
    }

    /// Rebuilds a model from saved encoder weights and centers, with fresh
    /// optimizer state.
    pub fn from_params(g: &SnapshotGraph, cfg: &MfcConfig, weight: Matrix, centers: Matrix) -> Result<Self> {
        let mut model = Self::new(g, cfg)?;
        if weight.shape() != model.encoder.weight.shape() {
            return Err(Error::shape(
                "encoder weight",
                format!("{:?} saved, {:?} expected", weight.shape(), model.encoder.weight.shape()),
            ));
        }
        if centers.shape() != model.centers.centers.shape() {
            return Err(Error::shape(
                "centers",
                format!("{:?} saved, {:?} expected", centers.shape(), model.centers.centers.shape()),
            ));
        }
        model.encoder.weight = weight;
        model.centers.centers = centers;
        Ok(model)
    }

    /// Drops the Adam moments and switches to learning rate `lr`.
    pub fn reset_optimizers(&mut self, lr: f64) {
        let adam = AdamConfig { lr, ..Default::default() };
        self.optim_weight = Adam::new(adam, &[self.encoder.weight.shape()]);
        self.optim_centers = Adam::new(adam, &[self.centers.centers.shape()]);
    }

    pub fn node_count(&self) -> usize {
        self.a_hat.nrows()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn encode_on(&self, tape: &mut Tape) -> Result<(Var, Var)> {
        let a = tape.leaf(self.a_hat.clone())?;
        let w = tape.leaf(self.encoder.weight.clone())?;
        let z = encode(tape, a, Features::Identity, w)?;
        Ok((w, z))
    }

    /// Records the full forward pass on `tape`.
    pub fn forward(&self, tape: &mut Tape) -> Result<Forward> {
        let (weight, z) = self.encode_on(tape)?;
        let centers = tape.leaf(self.centers.centers.clone())?;
        let (raw, q) = compute_assignment(tape, z, centers, self.lambda)?;
        let gae_loss = reconstruction_loss(tape, &self.target, z)?;
        let cluster_loss = clustering_loss(tape, z, q, centers)?;
        Ok(Forward { weight, centers, z, raw, q, gae_loss, cluster_loss })
    }

    /// Current embedding `Z`.
    pub fn embedding(&self) -> Result<Matrix> {
        let mut tape = Tape::new();
        let (_, z) = self.encode_on(&mut tape)?;
        Ok(tape.value(z).clone())
    }

    pub fn assignment(&self) -> Result<Assignment> {
        let mut tape = Tape::new();
        let f = self.forward(&mut tape)?;
        Ok(Assignment { raw: tape.value(f.raw).clone(), q: tape.value(f.q).clone() })
    }

    /// One Adam step on the reconstruction loss alone.
    pub fn warmup_step(&mut self) -> Result<f64> {
        let mut tape = Tape::new();
        let (w, z) = self.encode_on(&mut tape)?;
        let loss = reconstruction_loss(&mut tape, &self.target, z)?;
        let value = tape.scalar(loss);
        let grads = tape.backward(loss)?;
        self.optim_weight.step(&mut [&mut self.encoder.weight], &[grads.get(w)])?;
        Ok(value)
    }

    /// Sets the centers to k-means centroids of the current embedding.
    pub fn init_centers(&mut self, seed: u64) -> Result<()> {
        let z = self.embedding()?;
        let km = kmeans(&z, self.centers.k(), seed)?;
        self.centers.centers = km.centers;
        Ok(())
    }

    /// One Adam step on `L_gae + α·L_c + extra`, where `extra` may append a
    /// term to the recorded forward pass and returns it with the value to
    /// report as the topological loss.
    pub fn joint_step<F>(&mut self, alpha: f64, extra: F) -> Result<StepLosses>
    where
        F: FnOnce(&mut Tape, &Forward) -> Result<Option<(Var, f64)>>,
    {
        let mut tape = Tape::new();
        let f = self.forward(&mut tape)?;
        let weighted = tape.scale(f.cluster_loss, alpha)?;
        let mut total = tape.add(f.gae_loss, weighted)?;
        let mut topo = 0.0;
        if let Some((term, value)) = extra(&mut tape, &f)? {
            total = tape.add(total, term)?;
            topo = value;
        }
        let losses = StepLosses {
            gae: tape.scalar(f.gae_loss),
            cluster: tape.scalar(f.cluster_loss),
            topo,
            total: tape.scalar(total),
        };
        let grads = tape.backward(total)?;
        self.optim_weight.step(&mut [&mut self.encoder.weight], &[grads.get(f.weight)])?;
        self.optim_centers.step(&mut [&mut self.centers.centers], &[grads.get(f.centers)])?;
        Ok(losses)
    }
}

/// Trained snapshot model with its loss trace.
#[derive(Clone, Debug)]
pub struct MfcOutcome {
    pub model: SnapshotModel,
    pub assignment: Assignment,
    pub losses: Vec<StepLosses>,
}

fn tag_epoch(err: Error, epoch: usize) -> Error {
    match err {
        Error::NonFinite(what) => Error::Divergence { epoch, detail: format!("non-finite {what}") },
        Error::Divergence { detail, .. } => Error::Divergence { epoch, detail },
        other => other,
    }
}

/// Warm-up on `L_gae`, k-means center initialization, then joint training
/// until the total loss settles or the epoch budget is spent.
pub fn train_mfc(g: &SnapshotGraph, cfg: &MfcConfig) -> Result<MfcOutcome> {
    let mut model = SnapshotModel::new(g, cfg)?;
    let warmup = cfg.warmup_epochs.min(cfg.epochs);
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..warmup {
        let gae = model.warmup_step().map_err(|e| tag_epoch(e, epoch))?;
        losses.push(StepLosses { gae, total: gae, ..Default::default() });
    }
    model.init_centers(cfg.seed)?;
    let mut joint_totals = Vec::new();
    for epoch in warmup..cfg.epochs {
        let step = model.joint_step(cfg.alpha, |_, _| Ok(None)).map_err(|e| tag_epoch(e, epoch))?;
        losses.push(step);
        joint_totals.push(step.total);
        if converged(&joint_totals, cfg.tol, cfg.patience) {
            log::debug!("mfc converged after {} epochs", epoch + 1);
            break;
        }
    }
    let assignment = model.assignment()?;
    Ok(MfcOutcome { model, assignment, losses })
}

pub(crate) fn converged(totals: &[f64], tol: f64, patience: usize) -> bool {
    if patience == 0 || totals.len() <= patience {
        return false;
    }
    let now = totals[totals.len() - 1];
    let before = totals[totals.len() - 1 - patience];
    (now - before).abs() <= tol * before.abs().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{central_difference, glorot_init, max_relative_error};

    #[test]
    fn centers_equal_embedding_give_identity() {
        let c = Matrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.0, 1.0, 0.3, 0.1, 0.0, 1.5]);
        let mut t = Tape::new();
        let z = t.leaf(c.clone()).unwrap();
        let cv = t.leaf(c).unwrap();
        let (raw, q) = compute_assignment(&mut t, z, cv, 0.0).unwrap();
        assert!((t.value(raw) - Matrix::identity(3, 3)).amax() < 1e-12);
        assert!((t.value(q) - Matrix::identity(3, 3)).amax() < 1e-12);
        assert_eq!(hard_labels(t.value(q)), vec![0, 1, 2]);
        let l = clustering_loss(&mut t, z, q, cv).unwrap();
        assert!(t.scalar(l) < 1e-20);
    }

    #[test]
    fn zero_inputs_have_zero_cluster_loss() {
        let mut t = Tape::new();
        let z = t.leaf(Matrix::zeros(4, 3)).unwrap();
        let q = t.leaf(Matrix::zeros(4, 2)).unwrap();
        let c = t.leaf(Matrix::zeros(2, 3)).unwrap();
        let l = clustering_loss(&mut t, z, q, c).unwrap();
        assert_eq!(t.scalar(l), 0.0);
    }

    #[test]
    fn hard_label_tie_break() {
        assert_eq!(hard_labels(&Matrix::identity(3, 3)), vec![0, 1, 2]);
        assert_eq!(hard_labels(&Matrix::from_element(1, 4, 0.25)), vec![0]);
    }

    #[test]
    fn rank_error_when_embedding_too_small() {
        let mut t = Tape::new();
        let z = t.leaf(Matrix::zeros(6, 2)).unwrap();
        let c = t.leaf(glorot_init(3, 2, 1)).unwrap();
        assert!(matches!(compute_assignment(&mut t, z, c, 1e-6), Err(Error::Rank { .. })));
    }

    #[test]
    fn cluster_loss_gradient_wrt_centers() {
        let z0 = glorot_init(7, 4, 3) * 3.0;
        let c0 = glorot_init(3, 4, 4) * 3.0;
        let eval = |c: &Matrix| {
            let mut t = Tape::new();
            let z = t.leaf(z0.clone()).unwrap();
            let cv = t.leaf(c.clone()).unwrap();
            let (_, q) = compute_assignment(&mut t, z, cv, 1e-6).unwrap();
            let l = clustering_loss(&mut t, z, q, cv).unwrap();
            (t, cv, l)
        };
        let (mut t, cv, l) = eval(&c0);
        let analytic = t.backward(l).unwrap().get(cv);
        let numeric = central_difference(&c0, 1e-6, |c| {
            let (t, _, l) = eval(c);
            t.scalar(l)
        });
        assert!(max_relative_error(&analytic, &numeric, 1e-8) < 1e-4);
    }

    #[test]
    fn convergence_window() {
        assert!(!converged(&[1.0; 10], 1e-6, 10));
        assert!(converged(&[1.0; 11], 1e-6, 10));
        let mut falling: Vec<f64> = (0..20).map(|i| 1.0 / (i + 1) as f64).collect();
        assert!(!converged(&falling, 1e-6, 10));
        falling.clear();
    }
}

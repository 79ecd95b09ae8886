//! Two-stage training over a dynamic graph, evaluation and run artifacts.
//!
//! Stage 1 trains an independent GAE + MFC model per snapshot. Stage 2
//! recomputes every community network and its diagrams at the start of each
//! epoch, then sweeps the interior snapshots in order, taking one step on
//! `L_gae + α·L_c + β·L_topo` for each with its neighbors' diagrams held
//! fixed. Boundary snapshots are not updated in stage 2.

mod artifacts;
mod config;
mod evaluate;

pub use artifacts::{
    load_run, read_losses_csv, write_run, ArtifactLayout, LOSSES_HEADER,
};
pub use config::{EvalMode, PipelineConfig};
pub use evaluate::{
    consistency_report, evaluate, predict, ConsistencyReport, ConsistencyRow, MetricsRow,
    MetricsTable,
};

use rayon::prelude::*;

use crate::community::{score_network, score_network_on_tape, CommunityNetwork};
use crate::error::Result;
use crate::graph::{DynamicGraph, SnapshotGraph};
use crate::mfc::{hard_labels, train_mfc, Forward, SnapshotModel, StepLosses};
use crate::tensor::{Matrix, Tape, Var};
use crate::topo_loss::{
    linear_surrogate, topo_gradient_with, topo_loss, SnapshotTopology, WassersteinConfig,
};

/// Encoder weights and centers of one snapshot model.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotParams {
    pub weight: Matrix,
    pub centers: Matrix,
}

impl SnapshotParams {
    pub fn of(model: &SnapshotModel) -> Self {
        Self { weight: model.encoder.weight.clone(), centers: model.centers.centers.clone() }
    }
}

/// One optimizer step of stage 2.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stage2Step {
    pub epoch: usize,
    pub t: usize,
    pub losses: StepLosses,
}

/// Trained models of every snapshot with their loss traces.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub config: PipelineConfig,
    pub models: Vec<SnapshotModel>,
    /// Parameters as they stood after stage 1.
    pub stage1_params: Vec<SnapshotParams>,
    pub stage1_losses: Vec<Vec<StepLosses>>,
    pub stage2_steps: Vec<Stage2Step>,
    /// Full topological loss at the start of each stage-2 epoch, then once
    /// more after the last one.
    pub stage2_topo: Vec<f64>,
    pub stage2_done: bool,
}

impl RunResult {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Models rebuilt from the stage-1 parameters.
    pub fn stage1_models(&self, dg: &DynamicGraph) -> Result<Vec<SnapshotModel>> {
        self.stage1_params
            .iter()
            .enumerate()
            .map(|(t, p)| {
                SnapshotModel::from_params(
                    dg.snapshot(t),
                    &self.config.mfc_config(t),
                    p.weight.clone(),
                    p.centers.clone(),
                )
            })
            .collect()
    }
}

/// Trains every snapshot independently (in parallel) on the reconstruction
/// warm-up followed by `L_gae + α·L_c`.
pub fn stage1_train(dg: &DynamicGraph, cfg: &PipelineConfig) -> Result<RunResult> {
    cfg.validate()?;
    let outcomes: Vec<_> = dg
        .snapshots()
        .par_iter()
        .enumerate()
        .map(|(t, g)| {
            let mfc = cfg.mfc_config(t);
            let outcome = if mfc.epochs == 0 {
                SnapshotModel::new(g, &mfc).map(|model| (model, Vec::new()))
            } else {
                train_mfc(g, &mfc).map(|o| (o.model, o.losses))
            };
            outcome.map_err(|e| e.at_snapshot(t))
        })
        .collect::<Result<_>>()?;
    let (models, stage1_losses): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    let stage1_params = models.iter().map(SnapshotParams::of).collect();
    Ok(RunResult {
        config: cfg.clone(),
        models,
        stage1_params,
        stage1_losses,
        stage2_steps: Vec::new(),
        stage2_topo: Vec::new(),
        stage2_done: false,
    })
}

/// Community network of a trained snapshot model.
pub fn model_network(model: &SnapshotModel, g: &SnapshotGraph) -> Result<CommunityNetwork> {
    let a = model.assignment()?;
    score_network(&a.raw, &a.q, g)
}

/// Networks, filtrations and diagrams of every snapshot, in parallel.
pub fn snapshot_topologies(models: &[SnapshotModel], dg: &DynamicGraph) -> Result<Vec<SnapshotTopology>> {
    models
        .par_iter()
        .enumerate()
        .map(|(t, model)| {
            model_network(model, dg.snapshot(t))
                .and_then(SnapshotTopology::new)
                .map_err(|e| e.at_snapshot(t))
        })
        .collect()
}

/// Records `β ·` (the part of the topological loss that depends on snapshot
/// `t`) on top of a forward pass, with `snaps` supplying the neighbors'
/// diagrams. Returns the term and the unweighted loss value.
pub fn topo_term(
    tape: &mut Tape,
    f: &Forward,
    g: &SnapshotGraph,
    snaps: &[SnapshotTopology],
    t: usize,
    beta: f64,
    cfg: WassersteinConfig,
) -> Result<(Var, f64)> {
    let labels = hard_labels(tape.value(f.q));
    let m = score_network_on_tape(tape, f.raw, &labels, g)?;
    let net = CommunityNetwork::from_labels(tape.value(m).clone(), &labels);
    let here = SnapshotTopology::new(net)?;
    let (loss, grad) = topo_gradient_with(&here, snaps, t, cfg)?;
    let term = linear_surrogate(tape, m, &(grad * beta), beta * loss)?;
    Ok((term, loss))
}

/// Topological fine-tuning of the interior snapshots.
pub fn stage2_train(mut result: RunResult, dg: &DynamicGraph, cfg: &PipelineConfig) -> Result<RunResult> {
    cfg.validate()?;
    let len = result.len();
    if len < 3 {
        log::warn!("stage 2 needs at least 3 snapshots, got {len}; skipping");
        result.stage2_done = true;
        return Ok(result);
    }
    let wcfg = WassersteinConfig::default();
    for model in &mut result.models {
        model.reset_optimizers(cfg.lr);
    }
    for epoch in 0..cfg.epochs_stage2 {
        let snaps = snapshot_topologies(&result.models, dg)?;
        result.stage2_topo.push(topo_loss(&snaps, wcfg)?.total);
        for t in 1..len - 1 {
            let g = dg.snapshot(t);
            let beta = cfg.beta_stage2;
            let losses = result.models[t]
                .joint_step(cfg.alpha_stage2, |tape, f| {
                    if beta == 0.0 {
                        return Ok(None);
                    }
                    topo_term(tape, f, g, &snaps, t, beta, wcfg).map(Some)
                })
                .map_err(|e| e.at_snapshot(t))?;
            result.stage2_steps.push(Stage2Step { epoch, t, losses });
        }
    }
    if cfg.epochs_stage2 > 0 {
        let snaps = snapshot_topologies(&result.models, dg)?;
        result.stage2_topo.push(topo_loss(&snaps, wcfg)?.total);
    }
    result.stage2_done = true;
    Ok(result)
}

/// Both stages.
pub fn train(dg: &DynamicGraph, cfg: &PipelineConfig) -> Result<RunResult> {
    let result = stage1_train(dg, cfg)?;
    stage2_train(result, dg, cfg)
}

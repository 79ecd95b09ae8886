use std::fmt::Write as _;

use super::config::{snapshot_seed, EvalMode, PipelineConfig};
use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, SnapshotGraph};
use crate::metrics::{accuracy, ari, kmeans, modularity, nmi, Scores};
use crate::mfc::SnapshotModel;
use crate::topo_loss::{wasserstein_distance, SnapshotTopology, WassersteinConfig, DIMS};

/// Predicted labels of snapshot `t` under the configured mode.
pub fn predict(model: &SnapshotModel, cfg: &PipelineConfig, t: usize) -> Result<Vec<usize>> {
    match cfg.mode {
        EvalMode::Fixed => Ok(kmeans(&model.embedding()?, cfg.k, snapshot_seed(cfg.seed, t))?.labels),
        EvalMode::Varying => Ok(model.assignment()?.hard_labels()),
    }
}

/// Scores over the non-isolated nodes of `g`. Without ground truth only
/// modularity is filled in.
pub fn snapshot_scores(g: &SnapshotGraph, pred: &[usize]) -> Result<(usize, Scores)> {
    let keep: Vec<usize> = g
        .degrees()
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > 0.0)
        .map(|(i, _)| i)
        .collect();
    let modularity = modularity(g, pred)?;
    let Some(truth) = g.labels() else {
        let nan = f64::NAN;
        return Ok((keep.len(), Scores { acc: nan, nmi: nan, ari: nan, modularity }));
    };
    let truth: Vec<usize> = keep.iter().map(|&i| truth[i]).collect();
    let pred: Vec<usize> = keep.iter().map(|&i| pred[i]).collect();
    Ok((
        keep.len(),
        Scores {
            acc: accuracy(&truth, &pred)?,
            nmi: nmi(&truth, &pred)?,
            ari: ari(&truth, &pred)?,
            modularity,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRow {
    pub t: usize,
    /// Nodes evaluated.
    pub n: usize,
    pub scores: Scores,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    /// Unweighted mean over snapshots.
    pub fn mean(&self) -> Scores {
        let len = self.rows.len() as f64;
        let avg = |f: fn(&Scores) -> f64| self.rows.iter().map(|r| f(&r.scores)).sum::<f64>() / len;
        Scores {
            acc: avg(|s| s.acc),
            nmi: avg(|s| s.nmi),
            ari: avg(|s| s.ari),
            modularity: avg(|s| s.modularity),
        }
    }

    pub fn mean_n(&self) -> f64 {
        self.rows.iter().map(|r| r.n as f64).sum::<f64>() / self.rows.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,n,ACC,NMI,ARI,Modularity\n");
        let mut line = |t: &str, n: String, s: &Scores| {
            writeln!(out, "{t},{n},{},{},{},{}", s.acc, s.nmi, s.ari, s.modularity)
                .expect("string write");
        };
        for r in &self.rows {
            line(&r.t.to_string(), r.n.to_string(), &r.scores);
        }
        line("mean", self.mean_n().to_string(), &self.mean());
        out
    }
}

/// Per-snapshot and mean scores of `models` on `dg`.
pub fn evaluate(models: &[SnapshotModel], dg: &DynamicGraph, cfg: &PipelineConfig) -> Result<MetricsTable> {
    if models.len() != dg.len() {
        return Err(Error::Validation(format!(
            "{} models for {} snapshots",
            models.len(),
            dg.len()
        )));
    }
    let rows = models
        .iter()
        .enumerate()
        .map(|(t, model)| {
            let pred = predict(model, cfg, t)?;
            let (n, scores) = snapshot_scores(dg.snapshot(t), &pred)?;
            Ok(MetricsRow { t, n, scores })
        })
        .collect::<Result<_>>()?;
    Ok(MetricsTable { rows })
}

/// Distance between the diagrams of snapshots `t` and `t + 1`, before and
/// after stage 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsistencyRow {
    pub t: usize,
    pub dim: usize,
    pub before: f64,
    pub after: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConsistencyReport {
    pub rows: Vec<ConsistencyRow>,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    if n == 0.0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl ConsistencyReport {
    /// Mean and population standard deviation over all rows, before stage 2.
    pub fn before(&self) -> (f64, f64) {
        mean_std(self.rows.iter().map(|r| r.before))
    }

    pub fn after(&self) -> (f64, f64) {
        mean_std(self.rows.iter().map(|r| r.after))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,dim,W_stage1,W_stage2\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.t, r.dim, r.before, r.after).expect("string write");
        }
        let ((mb, sb), (ma, sa)) = (self.before(), self.after());
        writeln!(out, "mean,all,{mb},{ma}").expect("string write");
        writeln!(out, "std,all,{sb},{sa}").expect("string write");
        out
    }
}

/// `W_{1,∞}` between consecutive snapshots' diagrams, both dimensions.
pub fn consistency_report(
    before: &[SnapshotTopology],
    after: &[SnapshotTopology],
) -> Result<ConsistencyReport> {
    if before.len() != after.len() {
        return Err(Error::Validation("before and after cover different snapshot counts".into()));
    }
    let cfg = WassersteinConfig::default();
    let mut rows = Vec::new();
    for t in 0..before.len().saturating_sub(1) {
        for (slot, &dim) in DIMS.iter().enumerate() {
            let dist = |s: &[SnapshotTopology]| {
                wasserstein_distance(&s[t].diagrams[slot], &s[t + 1].diagrams[slot], cfg).map(|r| r.0)
            };
            rows.push(ConsistencyRow { t, dim, before: dist(before)?, after: dist(after)? });
        }
    }
    Ok(ConsistencyReport { rows })
}

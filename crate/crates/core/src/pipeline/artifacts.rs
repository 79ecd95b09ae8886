use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::PipelineConfig;
use super::evaluate::{consistency_report, evaluate};
use super::{snapshot_topologies, RunResult, SnapshotParams, Stage2Step};
use crate::error::{Error, Result};
use crate::graph::DynamicGraph;
use crate::mfc::{SnapshotModel, StepLosses};
use crate::tda::diagram_to_text;
use crate::tensor::{read_matrix, write_matrix, Matrix};
use crate::topo_loss::{topo_loss, WassersteinConfig, DIMS};

pub const LOSSES_HEADER: &str = "stage,epoch,t,gae,cluster,topo,total";

/// File names under a run directory.
#[derive(Clone, Debug)]
pub struct ArtifactLayout {
    pub root: PathBuf,
}

impl ArtifactLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.txt")
    }

    pub fn metrics(&self) -> PathBuf {
        self.root.join("metrics.csv")
    }

    pub fn metrics_stage1(&self) -> PathBuf {
        self.root.join("metrics_stage1.csv")
    }

    pub fn consistency(&self) -> PathBuf {
        self.root.join("consistency.csv")
    }

    pub fn losses(&self) -> PathBuf {
        self.root.join("losses.csv")
    }

    pub fn topo_terms(&self) -> PathBuf {
        self.root.join("topo_terms.csv")
    }

    pub fn params(&self, stage: u8, t: usize, what: &str) -> PathBuf {
        self.root.join("models").join(format!("stage{stage}")).join(format!("t_{t}_{what}.bin"))
    }

    pub fn diagram(&self, t: usize, dim: usize) -> PathBuf {
        self.root.join("diagrams").join(format!("t_{t}_dim{dim}.txt"))
    }

    pub fn embedding(&self, t: usize) -> PathBuf {
        self.root.join("embeddings").join(format!("t_{t}.txt"))
    }

    pub fn assignment(&self, t: usize) -> PathBuf {
        self.root.join("assignments").join(format!("t_{t}.txt"))
    }

    pub fn labels(&self, t: usize) -> PathBuf {
        self.root.join("labels").join(format!("t_{t}.txt"))
    }

    pub fn network(&self, t: usize) -> PathBuf {
        self.root.join("networks").join(format!("t_{t}.txt"))
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn save_matrix(path: &Path, m: &Matrix) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_matrix(&mut w, m).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn load_matrix(path: &Path) -> Result<Matrix> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix(&mut BufReader::new(file)).map_err(|e| Error::io(path, e))
}

/// `id v_1 … v_d` rows.
fn rows_by_id(ids: &[String], m: &Matrix) -> String {
    let mut out = String::new();
    for (i, id) in ids.iter().enumerate() {
        out.push_str(id);
        for v in m.row(i).iter() {
            write!(out, " {v}").expect("string write");
        }
        out.push('\n');
    }
    out
}

fn losses_csv(result: &RunResult) -> String {
    let mut out = format!("{LOSSES_HEADER}\n");
    let mut line = |stage: u8, epoch: usize, t: usize, l: &StepLosses| {
        writeln!(out, "{stage},{epoch},{t},{},{},{},{}", l.gae, l.cluster, l.topo, l.total)
            .expect("string write");
    };
    for (t, trace) in result.stage1_losses.iter().enumerate() {
        for (epoch, l) in trace.iter().enumerate() {
            line(1, epoch, t, l);
        }
    }
    for s in &result.stage2_steps {
        line(2, s.epoch, s.t, &s.losses);
    }
    out
}

/// Parses a losses file back into per-snapshot stage-1 traces and stage-2
/// steps.
pub fn read_losses_csv(text: &str) -> Result<(Vec<Vec<StepLosses>>, Vec<Stage2Step>)> {
    let mut stage1: Vec<Vec<StepLosses>> = Vec::new();
    let mut stage2 = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let bad = || Error::Parse { path: PathBuf::from("losses.csv"), line: n + 1, msg: line.into() };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad());
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad());
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let (stage, epoch, t) = (int(f[0])?, int(f[1])?, int(f[2])?);
        let losses =
            StepLosses { gae: real(f[3])?, cluster: real(f[4])?, topo: real(f[5])?, total: real(f[6])? };
        match stage {
            1 => {
                if stage1.len() <= t {
                    stage1.resize(t + 1, Vec::new());
                }
                stage1[t].push(losses);
            }
            2 => stage2.push(Stage2Step { epoch, t, losses }),
            _ => return Err(bad()),
        }
    }
    Ok((stage1, stage2))
}

/// Writes parameters, loss traces, per-snapshot exports of the final
/// models, metrics and (after stage 2) the consistency table.
pub fn write_run(layout: &ArtifactLayout, result: &RunResult, dg: &DynamicGraph) -> Result<()> {
    let cfg = &result.config;
    write_text(&layout.config(), &cfg.to_kv())?;
    for (t, p) in result.stage1_params.iter().enumerate() {
        save_matrix(&layout.params(1, t, "weight"), &p.weight)?;
        save_matrix(&layout.params(1, t, "centers"), &p.centers)?;
    }
    if result.stage2_done {
        for (t, m) in result.models.iter().enumerate() {
            save_matrix(&layout.params(2, t, "weight"), &m.encoder.weight)?;
            save_matrix(&layout.params(2, t, "centers"), &m.centers.centers)?;
        }
    }
    write_text(&layout.losses(), &losses_csv(result))?;

    let topo = snapshot_topologies(&result.models, dg)?;
    for (t, model) in result.models.iter().enumerate() {
        let ids = dg.snapshot(t).node_ids();
        let a = model.assignment()?;
        write_text(&layout.embedding(t), &rows_by_id(ids, &model.embedding()?))?;
        write_text(&layout.assignment(t), &rows_by_id(ids, &a.q))?;
        let labels: String = ids
            .iter()
            .zip(a.hard_labels())
            .map(|(id, l)| format!("{id} {l}\n"))
            .collect();
        write_text(&layout.labels(t), &labels)?;
        write_text(&layout.network(t), &topo[t].network.to_text())?;
        for &dim in &DIMS {
            let mut only = topo[t].persistence.clone();
            only.pairs.retain(|p| p.dim == dim);
            write_text(&layout.diagram(t, dim), &diagram_to_text(&topo[t].filtration, &only))?;
        }
    }
    write_text(&layout.topo_terms(), &topo_loss(&topo, WassersteinConfig::default())?.to_csv())?;

    write_text(&layout.metrics(), &evaluate(&result.models, dg, cfg)?.to_csv())?;
    let stage1 = result.stage1_models(dg)?;
    write_text(&layout.metrics_stage1(), &evaluate(&stage1, dg, cfg)?.to_csv())?;
    if result.stage2_done {
        let before = snapshot_topologies(&stage1, dg)?;
        write_text(&layout.consistency(), &consistency_report(&before, &topo)?.to_csv())?;
    }
    Ok(())
}

fn load_params(layout: &ArtifactLayout, stage: u8, dg: &DynamicGraph) -> Result<Vec<SnapshotParams>> {
    (0..dg.len())
        .map(|t| {
            Ok(SnapshotParams {
                weight: load_matrix(&layout.params(stage, t, "weight"))?,
                centers: load_matrix(&layout.params(stage, t, "centers"))?,
            })
        })
        .collect()
}

/// Restores a run written by [`write_run`]. The final models are the
/// stage-2 ones when present; optimizer state is not restored.
pub fn load_run(layout: &ArtifactLayout, dg: &DynamicGraph) -> Result<RunResult> {
    if !layout.config().exists() {
        return Err(Error::MissingArtifact(layout.config()));
    }
    let config = PipelineConfig::load(&layout.config())?;
    let stage1_params = load_params(layout, 1, dg)?;
    let stage2_done = layout.params(2, 0, "weight").exists();
    let finals = if stage2_done { load_params(layout, 2, dg)? } else { stage1_params.clone() };
    let models = finals
        .into_iter()
        .enumerate()
        .map(|(t, p)| SnapshotModel::from_params(dg.snapshot(t), &config.mfc_config(t), p.weight, p.centers))
        .collect::<Result<Vec<_>>>()?;
    let (stage1_losses, stage2_steps) = if layout.losses().exists() {
        let path = layout.losses();
        read_losses_csv(&fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?)?
    } else {
        (vec![Vec::new(); dg.len()], Vec::new())
    };
    Ok(RunResult {
        config,
        models,
        stage1_params,
        stage1_losses,
        stage2_steps: if stage2_done { stage2_steps } else { Vec::new() },
        stage2_topo: Vec::new(),
        stage2_done,
    })
}

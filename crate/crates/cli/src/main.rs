use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use toporeg::graph::{bridge_scenario, load_dynamic_graph, write_dynamic_graph, PartitionParams};
use toporeg::pipeline::{
    consistency_report, evaluate, load_run, snapshot_topologies, stage1_train, stage2_train,
    write_run, ArtifactLayout, EvalMode, PipelineConfig,
};
use toporeg::DynamicGraph;

/// Dynamic community detection with a topological consistency regularizer.
#[derive(Parser, Debug)]
#[command(name = "toporeg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the bridge-perturbation scenario as a snapshot directory.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probability of each bridge edge in the middle snapshot.
        #[arg(long, default_value_t = 0.1)]
        p_add: f64,
    },
    /// Train stage 1, stage 2, or both.
    Train {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        stage: Option<u8>,
    },
    /// Score the trained models of a run directory.
    Eval {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Consistency table and diagram export for a finished run.
    Report {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Generate the synthetic scenario, train both stages and write every
    /// artifact.
    Demo {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        p_add: f64,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Snapshot directory.
    #[arg(long)]
    data: PathBuf,
    /// Run directory.
    #[arg(long)]
    out: PathBuf,
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<EvalMode>,
    #[arg(long)]
    k: Option<usize>,
}

fn parse_mode(s: &str) -> Result<EvalMode, String> {
    s.parse().map_err(|e: toporeg::Error| e.to_string())
}

impl RunArgs {
    /// Config file (or `base`) with command-line overrides.
    fn config(&self, base: PipelineConfig) -> anyhow::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => base,
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(mode) = self.mode {
            cfg.mode = mode;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn graph(&self) -> anyhow::Result<DynamicGraph> {
        load_dynamic_graph(&self.data)
            .with_context(|| format!("loading snapshots from {}", self.data.display()))
    }
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn train(run: &RunArgs, stage: Option<u8>) -> anyhow::Result<()> {
    let dg = run.graph()?;
    let layout = ArtifactLayout::new(&run.out);
    let result = match stage {
        Some(2) => {
            let previous = load_run(&layout, &dg).context("stage 2 needs the stage-1 artifacts")?;
            let cfg = run.config(previous.config.clone())?;
            stage2_train(previous, &dg, &cfg)?
        }
        Some(_) => stage1_train(&dg, &run.config(PipelineConfig::default())?)?,
        None => {
            let cfg = run.config(PipelineConfig::default())?;
            stage2_train(stage1_train(&dg, &cfg)?, &dg, &cfg)?
        }
    };
    write_run(&layout, &result, &dg)?;
    log::info!("wrote run to {}", run.out.display());
    Ok(())
}

fn eval(run: &RunArgs) -> anyhow::Result<()> {
    let dg = run.graph()?;
    let layout = ArtifactLayout::new(&run.out);
    let result = load_run(&layout, &dg)?;
    let cfg = run.config(result.config.clone())?;
    let table = evaluate(&result.models, &dg, &cfg)?.to_csv();
    write_file(&run.out.join("metrics_eval.csv"), &table)?;
    print!("{table}");
    Ok(())
}

fn report(run: &RunArgs) -> anyhow::Result<()> {
    let dg = run.graph()?;
    let layout = ArtifactLayout::new(&run.out);
    let result = load_run(&layout, &dg)?;
    if !result.stage2_done {
        bail!("{} holds no stage-2 models; run `train --stage 2` first", run.out.display());
    }
    let before = snapshot_topologies(&result.stage1_models(&dg)?, &dg)?;
    let after = snapshot_topologies(&result.models, &dg)?;
    let report = consistency_report(&before, &after)?;
    // Rewrites diagrams and the consistency table from the saved models.
    write_run(&layout, &result, &dg)?;
    let ((mb, sb), (ma, sa)) = (report.before(), report.after());
    println!("consecutive-snapshot distance, stage 1: {mb:.6} ± {sb:.6}");
    println!("consecutive-snapshot distance, stage 2: {ma:.6} ± {sa:.6}");
    Ok(())
}

fn demo(out: &Path, seed: u64, config: Option<&Path>, p_add: f64) -> anyhow::Result<()> {
    let mut cfg = match config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    cfg.seed = seed;
    let params = PartitionParams { k: cfg.k, ..Default::default() };
    let data = out.join("data");
    write_dynamic_graph(&data, &bridge_scenario(&params, p_add, seed)?)?;
    // Train on what was written, so the run can be re-evaluated from disk.
    let dg = load_dynamic_graph(&data)?;
    let stage1 = stage1_train(&dg, &cfg)?;
    let before = evaluate(&stage1.models, &dg, &cfg)?;
    let result = stage2_train(stage1, &dg, &cfg)?;
    let after = evaluate(&result.models, &dg, &cfg)?;
    write_run(&ArtifactLayout::new(out), &result, &dg)?;
    let t = dg.len() / 2;
    println!(
        "perturbed snapshot {t}: ACC {:.4} after stage 1, {:.4} after stage 2",
        before.rows[t].scores.acc, after.rows[t].scores.acc
    );
    println!("artifacts in {}", out.display());
    Ok(())
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            // Value errors carry no usage line of their own.
            let _ = e.print();
            if !e.to_string().contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            std::process::exit(2);
        }
    };
    match cli.command {
        Command::Synth { out, seed, p_add } => {
            write_dynamic_graph(&out, &bridge_scenario(&PartitionParams::default(), p_add, seed)?)?;
            println!("wrote 3 snapshots to {}", out.display());
        }
        Command::Train { run, stage } => train(&run, stage)?,
        Command::Eval { run } => eval(&run)?,
        Command::Report { run } => report(&run)?,
        Command::Demo { out, seed, config, p_add } => demo(&out, seed, config.as_deref(), p_add)?,
    }
    Ok(())
}

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mfc::MfcConfig;

/// How predicted labels are read off a trained model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    /// k-means with `K` clusters on the embedding.
    Fixed,
    /// Row argmax of the assignment matrix; `K` is an upper bound.
    Varying,
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" | "fixed-K" | "fixed-k" => Ok(Self::Fixed),
            "varying" | "varying-K" | "varying-k" => Ok(Self::Varying),
            other => Err(Error::Config(format!("unknown mode {other:?}, expected fixed or varying"))),
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fixed => "fixed",
            Self::Varying => "varying",
        })
    }
}

/// Hyperparameters of the two training stages.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub k: usize,
    pub embed_dim: usize,
    pub lr: f64,
    pub epochs_stage1: usize,
    /// Reconstruction-only epochs at the start of stage 1.
    pub warmup_epochs: usize,
    pub epochs_stage2: usize,
    pub alpha_stage1: f64,
    pub beta_stage1: f64,
    pub alpha_stage2: f64,
    pub beta_stage2: f64,
    pub lambda_pinv: f64,
    pub seed: u64,
    pub mode: EvalMode,
    /// Stage-1 early stopping: relative loss change below `tol` for
    /// `patience` consecutive epochs.
    pub tol: f64,
    pub patience: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k: 5,
            embed_dim: 30,
            lr: 1e-3,
            epochs_stage1: 500,
            warmup_epochs: 200,
            epochs_stage2: 500,
            alpha_stage1: 10.0,
            beta_stage1: 0.0,
            alpha_stage2: 1.0,
            beta_stage2: 10.0,
            lambda_pinv: 1e-6,
            seed: 0,
            mode: EvalMode::Varying,
            tol: 1e-6,
            patience: 10,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim < self.k {
            return Err(Error::Rank { embed_dim: self.embed_dim, k: self.k });
        }
        let weights = [self.alpha_stage1, self.beta_stage1, self.alpha_stage2, self.beta_stage2];
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Config("loss weights must be finite and non-negative".into()));
        }
        if self.beta_stage1 != 0.0 {
            return Err(Error::Config(
                "beta_stage1 must be 0: stage 1 trains every snapshot on its own".into(),
            ));
        }
        if !(self.lr > 0.0) || !(self.lambda_pinv >= 0.0) {
            return Err(Error::Config("lr must be positive and lambda_pinv non-negative".into()));
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment, unknown keys are
    /// rejected and missing keys keep their defaults.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "k" | "K" => cfg.k = parse(key, value)?,
                "embed_dim" => cfg.embed_dim = parse(key, value)?,
                "lr" => cfg.lr = parse(key, value)?,
                "epochs_stage1" => cfg.epochs_stage1 = parse(key, value)?,
                "warmup_epochs" => cfg.warmup_epochs = parse(key, value)?,
                "epochs_stage2" => cfg.epochs_stage2 = parse(key, value)?,
                "alpha_stage1" => cfg.alpha_stage1 = parse(key, value)?,
                "beta_stage1" => cfg.beta_stage1 = parse(key, value)?,
                "alpha_stage2" => cfg.alpha_stage2 = parse(key, value)?,
                "beta_stage2" => cfg.beta_stage2 = parse(key, value)?,
                "lambda_pinv" => cfg.lambda_pinv = parse(key, value)?,
                "seed" => cfg.seed = parse(key, value)?,
                "mode" => cfg.mode = value.parse()?,
                "tol" => cfg.tol = parse(key, value)?,
                "patience" => cfg.patience = parse(key, value)?,
                other => return Err(Error::Config(format!("unknown key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv(&text)
    }

    pub fn to_kv(&self) -> String {
        format!(
            "k = {}\nembed_dim = {}\nlr = {}\nepochs_stage1 = {}\nwarmup_epochs = {}\n\
             epochs_stage2 = {}\nalpha_stage1 = {}\nbeta_stage1 = {}\nalpha_stage2 = {}\n\
             beta_stage2 = {}\nlambda_pinv = {}\nseed = {}\nmode = {}\ntol = {}\npatience = {}\n",
            self.k,
            self.embed_dim,
            self.lr,
            self.epochs_stage1,
            self.warmup_epochs,
            self.epochs_stage2,
            self.alpha_stage1,
            self.beta_stage1,
            self.alpha_stage2,
            self.beta_stage2,
            self.lambda_pinv,
            self.seed,
            self.mode,
            self.tol,
            self.patience,
        )
    }

    /// Per-snapshot stage-1 settings; snapshot `t` gets its own seed.
    pub fn mfc_config(&self, t: usize) -> MfcConfig {
        MfcConfig {
            k: self.k,
            embed_dim: self.embed_dim,
            alpha: self.alpha_stage1,
            epochs: self.epochs_stage1,
            warmup_epochs: self.warmup_epochs,
            lr: self.lr,
            lambda: self.lambda_pinv,
            seed: snapshot_seed(self.seed, t),
            tol: self.tol,
            patience: self.patience,
        }
    }
}

pub(crate) fn snapshot_seed(seed: u64, t: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(t as u64)
}

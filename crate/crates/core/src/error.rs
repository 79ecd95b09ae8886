use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can surface.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path} line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("snapshot sequence has a gap: expected snapshot_{expected}.tsv")]
    SnapshotGap { expected: usize },
    #[error("snapshot {0} contains no edges")]
    EmptyGraph(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("shape contract violated in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("matrix is singular (pivot {pivot:e} below {threshold:e})")]
    Singular { pivot: f64, threshold: f64 },
    #[error("embedding dimension {embed_dim} is smaller than cluster count {k}; the pseudo-inverse of the centers does not exist")]
    Rank { embed_dim: usize, k: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("backward already run on this tape; record a new forward pass first")]
    BackwardTwice,
    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },
    #[error("filtration integrity: {0}")]
    FiltrationIntegrity(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(PathBuf),
    #[error("config error: {0}")]
    Config(String),
    #[error("snapshot {t}: {source}")]
    Snapshot {
        t: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape { op, detail: detail.into() }
    }

    pub fn at_snapshot(self, t: usize) -> Self {
        Error::Snapshot { t, source: Box::new(self) }
    }
}

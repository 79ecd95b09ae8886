//! Clustering quality: ACC (best label bijection), NMI, ARI and weighted
//! modularity, plus seeded k-means for the fixed-K evaluation mode.

mod kmeans;

pub use kmeans::{kmeans, KMeans};

use crate::assignment::min_cost_assignment;
use crate::error::{Error, Result};
use crate::graph::SnapshotGraph;
use crate::tensor::Matrix;

/// Counts of (true label, predicted label) co-occurrences over dense label codes.
#[derive(Clone, Debug, PartialEq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    total: u64,
}

fn dense_codes(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut distinct = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let codes = labels
        .iter()
        .map(|l| distinct.binary_search(l).expect("label present"))
        .collect();
    (codes, distinct.len())
}

impl ContingencyTable {
    pub fn new(truth: &[usize], pred: &[usize]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::Validation(format!(
                "{} true labels vs {} predictions",
                truth.len(),
                pred.len()
            )));
        }
        if truth.is_empty() {
            return Err(Error::Validation("no labels to evaluate".into()));
        }
        let (t, kt) = dense_codes(truth);
        let (p, kp) = dense_codes(pred);
        let mut counts = vec![vec![0u64; kp]; kt];
        for (a, b) in t.into_iter().zip(p) {
            counts[a][b] += 1;
        }
        Ok(Self { counts, total: truth.len() as u64 })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let cols = self.counts.first().map_or(0, Vec::len);
        (0..cols).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }
}

/// Fraction of nodes matched under the best one-to-one label mapping.
pub fn accuracy(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(truth, pred)?;
    let rows = table.counts.len();
    let cols = table.counts[0].len();
    let cost = Matrix::from_fn(rows, cols, |i, j| -(table.counts[i][j] as f64));
    let (_, total) = min_cost_assignment(&cost);
    Ok(-total / table.total as f64)
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalized by the arithmetic mean of the two entropies.
pub fn nmi(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(truth, pred)?;
    let n = table.total as f64;
    let (rows, cols) = (table.row_sums(), table.col_sums());
    let (ht, hp) = (entropy(&rows, n), entropy(&cols, n));
    if ht == 0.0 && hp == 0.0 {
        return Ok(1.0);
    }
    if ht == 0.0 || hp == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (0.5 * (ht + hp))).clamp(0.0, 1.0))
}

fn pairs(c: u64) -> f64 {
    let c = c as f64;
    c * (c - 1.0) / 2.0
}

/// Adjusted Rand index (pair counting, adjusted for chance).
pub fn ari(truth: &[usize], pred: &[usize]) -> Result<f64> {
    if truth.len() < 2 {
        return Err(Error::Validation("ARI needs at least two nodes".into()));
    }
    let table = ContingencyTable::new(truth, pred)?;
    let index: f64 = table.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let a: f64 = table.row_sums().into_iter().map(pairs).sum();
    let b: f64 = table.col_sums().into_iter().map(pairs).sum();
    let expected = a * b / pairs(table.total);
    let max = 0.5 * (a + b);
    if max == expected {
        // Both partitions are trivial (one block, or all singletons).
        return Ok(if a == b { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// Weighted Newman modularity with `2m = Σ_ij W_ij`.
pub fn modularity(g: &SnapshotGraph, labels: &[usize]) -> Result<f64> {
    if labels.len() != g.node_count() {
        return Err(Error::Validation("labels do not cover the snapshot".into()));
    }
    let two_m = g.total_edge_weight();
    if two_m <= 0.0 {
        return Err(Error::Degenerate("modularity of a graph without edges".into()));
    }
    let (codes, k) = dense_codes(labels);
    let mut internal = vec![0.0; k];
    let mut degree = vec![0.0; k];
    let degrees = g.degrees();
    for (i, &ci) in codes.iter().enumerate() {
        degree[ci] += degrees[i];
        for (j, &cj) in codes.iter().enumerate() {
            if ci == cj {
                internal[ci] += g.weight(i, j);
            }
        }
    }
    Ok(internal
        .iter()
        .zip(&degree)
        .map(|(inner, deg)| inner / two_m - (deg / two_m).powi(2))
        .sum())
}

/// One row of an evaluation table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scores {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub modularity: f64,
}

/// All four scores; ACC/NMI/ARI are NaN when no ground truth is available.
pub fn score(g: &SnapshotGraph, pred: &[usize]) -> Result<Scores> {
    let modularity = modularity(g, pred)?;
    match g.labels() {
        Some(truth) => Ok(Scores {
            acc: accuracy(truth, pred)?,
            nmi: nmi(truth, pred)?,
            ari: ari(truth, pred)?,
            modularity,
        }),
        None => Ok(Scores { acc: f64::NAN, nmi: f64::NAN, ari: f64::NAN, modularity }),
    }
}

//! Snapshot edge-list files.
//!
//! `snapshot_<t>.tsv` holds one `u v [w]` edge per line (tab or space
//! separated, `#` starts a comment, missing weight means 1.0).
//! `labels_<t>.tsv` holds `u label` lines.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{DynamicGraph, SnapshotGraph};
use crate::error::{Error, Result};

fn snapshot_path(dir: &Path, t: usize) -> PathBuf {
    dir.join(format!("snapshot_{t}.tsv"))
}

fn labels_path(dir: &Path, t: usize) -> PathBuf {
    dir.join(format!("labels_{t}.tsv"))
}

/// Orders numeric ids numerically and everything else lexicographically
/// after them.
fn id_order(a: &str, b: &str) -> Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            None
        } else {
            Some((i + 1, line.split_whitespace().collect()))
        }
    })
}

/// Loads every `snapshot_<t>.tsv` (and matching `labels_<t>.tsv`) under `dir`.
pub fn load_dynamic_graph(dir: impl AsRef<Path>) -> Result<DynamicGraph> {
    let dir = dir.as_ref();
    let mut indices = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(t) = name
            .strip_prefix("snapshot_")
            .and_then(|s| s.strip_suffix(".tsv"))
            .and_then(|s| s.parse::<usize>().ok())
        {
            indices.push(t);
        }
    }
    indices.sort_unstable();
    if indices.is_empty() {
        return Err(Error::SnapshotGap { expected: 0 });
    }
    for (expected, &t) in indices.iter().enumerate() {
        if t != expected {
            return Err(Error::SnapshotGap { expected });
        }
    }
    let snapshots = indices
        .iter()
        .map(|&t| load_snapshot(dir, t))
        .collect::<Result<Vec<_>>>()?;
    DynamicGraph::new(snapshots)
}

/// Loads snapshot `t` from `dir`.
pub fn load_snapshot(dir: impl AsRef<Path>, t: usize) -> Result<SnapshotGraph> {
    let dir = dir.as_ref();
    let path = snapshot_path(dir, t);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;

    let mut raw_edges = Vec::new();
    for (line, fields) in data_lines(&text) {
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::Parse {
                path: path.clone(),
                line,
                msg: format!("expected `u v [w]`, got {} fields", fields.len()),
            });
        }
        let w = match fields.get(2) {
            Some(s) => s.parse::<f64>().map_err(|e| Error::Parse {
                path: path.clone(),
                line,
                msg: format!("bad weight {s:?}: {e}"),
            })?,
            None => 1.0,
        };
        if !w.is_finite() || w < 0.0 {
            return Err(Error::Validation(format!(
                "{} line {line}: negative or non-finite weight {w}",
                path.display()
            )));
        }
        if fields[0] == fields[1] {
            return Err(Error::Validation(format!(
                "{} line {line}: self-loop on {}",
                path.display(),
                fields[0]
            )));
        }
        raw_edges.push((fields[0].to_string(), fields[1].to_string(), w));
    }
    if raw_edges.is_empty() {
        return Err(Error::EmptyGraph(path.display().to_string()));
    }

    let mut ids: Vec<String> = raw_edges
        .iter()
        .flat_map(|(u, v, _)| [u.clone(), v.clone()])
        .collect();
    ids.sort_by(|a, b| id_order(a, b));
    ids.dedup();
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let edges: Vec<_> = raw_edges
        .iter()
        .map(|(u, v, w)| (index[u.as_str()], index[v.as_str()], *w))
        .collect();

    let labels_file = labels_path(dir, t);
    let labels = if labels_file.exists() {
        Some(load_labels(&labels_file, &ids)?)
    } else {
        None
    };
    SnapshotGraph::from_edges(ids, edges, labels)
}

fn load_labels(path: &Path, ids: &[String]) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut by_node: HashMap<String, String> = HashMap::new();
    for (line, fields) in data_lines(&text) {
        if fields.len() != 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: "expected `u label`".into(),
            });
        }
        by_node.insert(fields[0].to_string(), fields[1].to_string());
    }
    let mut names: Vec<&str> = Vec::with_capacity(ids.len());
    for id in ids {
        match by_node.get(id) {
            Some(l) => names.push(l),
            None => {
                return Err(Error::Validation(format!(
                    "{}: node {id} has no label",
                    path.display()
                )))
            }
        }
    }
    let mut distinct: Vec<&str> = names.clone();
    distinct.sort_by(|a, b| id_order(a, b));
    distinct.dedup();
    let code: BTreeMap<&str, usize> = distinct.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    Ok(names.iter().map(|s| code[s]).collect())
}

/// Writes `g` as `snapshot_<t>.tsv` (plus `labels_<t>.tsv` when labelled).
/// Isolated nodes have no edge line and are therefore not persisted.
pub fn write_snapshot(dir: impl AsRef<Path>, t: usize, g: &SnapshotGraph) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ids = g.node_ids();
    let mut out = String::new();
    for (u, v, w) in g.edges() {
        writeln!(out, "{}\t{}\t{}", ids[u], ids[v], w).expect("string write");
    }
    let path = snapshot_path(dir, t);
    fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
    if let Some(labels) = g.labels() {
        let mut out = String::new();
        for (id, l) in ids.iter().zip(labels) {
            writeln!(out, "{id}\t{l}").expect("string write");
        }
        let path = labels_path(dir, t);
        fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

pub fn write_dynamic_graph(dir: impl AsRef<Path>, dg: &DynamicGraph) -> Result<()> {
    for (t, g) in dg.snapshots().iter().enumerate() {
        write_snapshot(dir.as_ref(), t, g)?;
    }
    Ok(())
}

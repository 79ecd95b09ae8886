use std::collections::HashMap;
use std::fmt::Write as _;

use super::filtration::Filtration;
use crate::error::{Error, Result};
use crate::graph::DisjointSet;

/// Death value given to classes that never die.
pub const ESSENTIAL_CAP: f64 = 1.0;

/// GF(2) boundary matrix; column `j` lists the row indices (sorted) of the
/// faces of simplex `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMatrix {
    pub columns: Vec<Vec<usize>>,
}

impl BoundaryMatrix {
    pub fn from_filtration(f: &Filtration) -> Result<Self> {
        f.validate()?;
        let index: HashMap<&[usize], usize> = f
            .simplices
            .iter()
            .enumerate()
            .map(|(i, s)| (s.vertices.as_slice(), i))
            .collect();
        let columns = f
            .simplices
            .iter()
            .map(|s| {
                if s.dim() == 0 {
                    return Vec::new();
                }
                let mut col: Vec<usize> = (0..s.vertices.len())
                    .map(|skip| {
                        let face: Vec<usize> = s
                            .vertices
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| *j != skip)
                            .map(|(_, v)| *v)
                            .collect();
                        index[face.as_slice()]
                    })
                    .collect();
                col.sort_unstable();
                col
            })
            .collect();
        Ok(Self { columns })
    }

    /// True when `∂∘∂ = 0` over GF(2).
    pub fn boundary_squared_vanishes(&self) -> bool {
        self.columns.iter().all(|col| {
            let mut acc: Vec<usize> = Vec::new();
            for &face in col {
                acc = xor(&acc, &self.columns[face]);
            }
            acc.is_empty()
        })
    }

    /// Standard left-to-right column reduction. Returns the pivot (lowest
    /// one) of every reduced column.
    pub fn reduce(&self) -> Vec<Option<usize>> {
        let mut reduced = self.columns.clone();
        let mut owner: HashMap<usize, usize> = HashMap::new();
        let mut lows = vec![None; reduced.len()];
        for j in 0..reduced.len() {
            while let Some(&low) = reduced[j].last() {
                match owner.get(&low) {
                    Some(&other) => reduced[j] = xor(&reduced[j], &reduced[other]),
                    None => {
                        owner.insert(low, j);
                        lows[j] = Some(low);
                        break;
                    }
                }
            }
        }
        lows
    }
}

/// Symmetric difference of two sorted index lists.
fn xor(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct PersistencePair {
    pub dim: usize,
    pub birth_level: usize,
    /// `None` for essential classes.
    pub death_level: Option<usize>,
    pub birth: f64,
    pub death: Option<f64>,
    /// Index of the creating simplex in the filtration.
    pub creator: usize,
    pub destroyer: Option<usize>,
}

impl PersistencePair {
    /// Death with essential classes capped.
    pub fn capped_death(&self, cap: f64) -> f64 {
        self.death.unwrap_or(cap)
    }
}

/// Dimension-0 and dimension-1 persistence of a filtration.
#[derive(Clone, Debug, PartialEq)]
pub struct PersistenceDiagram {
    pub pairs: Vec<PersistencePair>,
    pub cap: f64,
}

impl PersistenceDiagram {
    pub fn dim(&self, dim: usize) -> impl Iterator<Item = &PersistencePair> {
        self.pairs.iter().filter(move |p| p.dim == dim)
    }

    /// `(birth_level, death_level)` multiset of one dimension, sorted.
    pub fn level_multiset(&self, dim: usize) -> Vec<(usize, Option<usize>)> {
        let mut v: Vec<_> = self.dim(dim).map(|p| (p.birth_level, p.death_level)).collect();
        v.sort();
        v
    }
}

/// Persistence pairs of dimensions 0 and 1 by boundary-matrix reduction.
/// Pairs born and killed at the same level are dropped.
pub fn compute_persistence(f: &Filtration) -> Result<PersistenceDiagram> {
    let boundary = BoundaryMatrix::from_filtration(f)?;
    let lows = boundary.reduce();
    let mut paired = vec![false; lows.len()];
    let mut pairs = Vec::new();
    for (j, low) in lows.iter().enumerate() {
        if let Some(i) = *low {
            paired[i] = true;
            paired[j] = true;
            let (creator, destroyer) = (&f.simplices[i], &f.simplices[j]);
            if creator.dim() > 1 || creator.level == destroyer.level {
                continue;
            }
            pairs.push(PersistencePair {
                dim: creator.dim(),
                birth_level: creator.level,
                death_level: Some(destroyer.level),
                birth: creator.value,
                death: Some(destroyer.value),
                creator: i,
                destroyer: Some(j),
            });
        }
    }
    for (i, low) in lows.iter().enumerate() {
        let s = &f.simplices[i];
        if low.is_none() && !paired[i] && s.dim() <= 1 {
            pairs.push(PersistencePair {
                dim: s.dim(),
                birth_level: s.level,
                death_level: None,
                birth: s.value,
                death: None,
                creator: i,
                destroyer: None,
            });
        }
    }
    pairs.sort_by_key(|p| (p.dim, p.creator));
    if pairs.iter().any(|p| p.dim > 1) {
        return Err(Error::FiltrationIntegrity("dimension above 1 in diagram".into()));
    }
    Ok(PersistenceDiagram { pairs, cap: ESSENTIAL_CAP })
}

/// Dimension-0 pairs by union-find under the elder rule: when an edge joins
/// two components, the one whose oldest vertex entered later dies.
/// Returns `(creator, destroyer)` simplex indices, zero-persistence pairs
/// removed.
pub fn zero_dim_pairs_union_find(f: &Filtration) -> Vec<(usize, Option<usize>)> {
    let n = f.simplices.len();
    let mut uf = DisjointSet::new(n);
    // Oldest simplex index of each component, keyed by root.
    let mut oldest: Vec<usize> = (0..n).collect();
    let position: HashMap<usize, usize> = f
        .simplices
        .iter()
        .enumerate()
        .filter(|(_, s)| s.dim() == 0)
        .map(|(i, s)| (s.vertices[0], i))
        .collect();
    let mut out = Vec::new();
    let mut dead = vec![false; n];
    for (j, s) in f.simplices.iter().enumerate() {
        if s.dim() != 1 {
            continue;
        }
        let (a, b) = (position[&s.vertices[0]], position[&s.vertices[1]]);
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra == rb {
            continue;
        }
        let (elder, younger) = if oldest[ra] < oldest[rb] { (ra, rb) } else { (rb, ra) };
        let victim = oldest[younger];
        dead[victim] = true;
        if f.simplices[victim].level != s.level {
            out.push((victim, Some(j)));
        }
        let keep = oldest[elder];
        uf.attach(younger, elder);
        let root = uf.find(elder);
        oldest[root] = keep;
    }
    for (i, s) in f.simplices.iter().enumerate() {
        if s.dim() == 0 && !dead[i] {
            out.push((i, None));
        }
    }
    out.sort();
    out
}

/// Edge (as an ordered community pair) that each birth and death value of a
/// pair is read from. Births at vertices and essential deaths map to `None`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Attribution {
    pub birth_edge: Option<(usize, usize)>,
    pub death_edge: Option<(usize, usize)>,
}

fn edge_of(f: &Filtration, simplex: usize) -> Option<(usize, usize)> {
    let s = &f.simplices[simplex];
    match s.dim() {
        0 => None,
        1 => Some((s.vertices[0], s.vertices[1])),
        _ => {
            // A triangle takes the value of its last-entering edge.
            let v = &s.vertices;
            [(v[0], v[1]), (v[0], v[2]), (v[1], v[2])]
                .into_iter()
                .max_by_key(|&(a, b)| f.position(&[a, b]).expect("faces precede cofaces"))
        }
    }
}

/// Maps each pair's birth/death to the edge whose filtration value it is.
pub fn inverse_map(f: &Filtration, d: &PersistenceDiagram) -> Vec<Attribution> {
    d.pairs
        .iter()
        .map(|p| Attribution {
            birth_edge: edge_of(f, p.creator),
            death_edge: p.destroyer.and_then(|j| edge_of(f, j)),
        })
        .collect()
}

/// A diagram point with the edges its coordinates are attributed to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagramPoint {
    pub birth: f64,
    pub death: f64,
    pub birth_edge: Option<(usize, usize)>,
    pub death_edge: Option<(usize, usize)>,
}

impl DiagramPoint {
    pub fn new(birth: f64, death: f64) -> Self {
        Self { birth, death, birth_edge: None, death_edge: None }
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// Points of one dimension for diagram comparison: essential deaths capped,
/// and the class of the very first vertex (the one essential component
/// every non-empty diagram shares) left out.
pub fn comparison_points(f: &Filtration, d: &PersistenceDiagram, dim: usize) -> Vec<DiagramPoint> {
    let attribution = inverse_map(f, d);
    d.pairs
        .iter()
        .zip(attribution)
        .filter(|(p, _)| p.dim == dim && !(p.dim == 0 && p.creator == 0 && p.death.is_none()))
        .map(|(p, a)| DiagramPoint {
            birth: p.birth,
            death: p.capped_death(d.cap),
            birth_edge: a.birth_edge,
            death_edge: a.death_edge,
        })
        .collect()
}

/// `dim birth death creator destroyer` lines; essential deaths print as
/// `inf`, vertices as `k`, edges as `k-l`, triangles as `a-b-c`, absent
/// destroyers as `-`.
pub fn diagram_to_text(f: &Filtration, d: &PersistenceDiagram) -> String {
    let name = |idx: Option<usize>| match idx {
        None => "-".to_string(),
        Some(i) => f.simplices[i]
            .vertices
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("-"),
    };
    let mut out = String::new();
    for p in &d.pairs {
        let death = p.death.map_or("inf".to_string(), |v| v.to_string());
        writeln!(out, "{}\t{}\t{}\t{}\t{}", p.dim, p.birth, death, name(Some(p.creator)), name(p.destroyer))
            .expect("string write");
    }
    out
}

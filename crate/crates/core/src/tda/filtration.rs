use std::collections::BTreeMap;

use super::cliques::maximal_cliques;
use crate::community::CommunityNetwork;
use crate::error::{Error, Result};

/// A simplex of dimension ≤ 2 in a filtration.
#[derive(Clone, Debug, PartialEq)]
pub struct Simplex {
    /// Sorted community ids.
    pub vertices: Vec<usize>,
    /// Filtration level; vertices sit at 0, level `i ≥ 1` adds the edges of
    /// weight `level_weights[i - 1]`.
    pub level: usize,
    /// Filtration value of the level, in `[0, 1]`.
    pub value: f64,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// Weight rank clique filtration of a community network.
///
/// Levels follow the distinct off-diagonal weights in descending order.
/// At level `i` the threshold graph holds every edge of weight ≥
/// `level_weights[i - 1]`; the vertices, edges and triangles of its maximal
/// cliques enter at the first level where they appear. Simplices are kept in
/// the strict order (level, dimension, lexicographic vertex set).
///
/// The value of level `i` is `1 − w_i / S`, where `S` is the sum of all
/// entries of the network matrix, so heavier edges enter earlier and all
/// values lie in `[0, 1]`.
#[derive(Clone, Debug)]
pub struct Filtration {
    pub vertices: Vec<usize>,
    pub simplices: Vec<Simplex>,
    pub level_weights: Vec<f64>,
    /// Normalizer `S` of the filtration values.
    pub scale: f64,
    /// Off-diagonal weights, `weights[k][l]`.
    pub weights: Vec<Vec<f64>>,
}

impl Filtration {
    /// Number of levels after the vertex level.
    pub fn levels(&self) -> usize {
        self.level_weights.len()
    }

    pub fn level_value(&self, level: usize) -> f64 {
        if level == 0 {
            0.0
        } else {
            1.0 - self.level_weights[level - 1] / self.scale
        }
    }

    pub fn position(&self, vertices: &[usize]) -> Option<usize> {
        self.simplices.iter().position(|s| s.vertices == vertices)
    }

    /// Checks that every face enters no later than its coface and that the
    /// simplex order is strictly increasing.
    pub fn validate(&self) -> Result<()> {
        let mut index = BTreeMap::new();
        for (i, s) in self.simplices.iter().enumerate() {
            if i > 0 {
                let prev = &self.simplices[i - 1];
                let key = |s: &Simplex| (s.level, s.dim(), s.vertices.clone());
                if key(prev) >= key(s) {
                    return Err(Error::FiltrationIntegrity(format!(
                        "simplex {:?} is not after {:?}",
                        s.vertices, prev.vertices
                    )));
                }
            }
            if s.dim() > 0 {
                for skip in 0..s.vertices.len() {
                    let face: Vec<usize> = s
                        .vertices
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != skip)
                        .map(|(_, v)| *v)
                        .collect();
                    match index.get(&face) {
                        Some(&j) if j < i => {}
                        _ => {
                            return Err(Error::FiltrationIntegrity(format!(
                                "face {face:?} of {:?} is missing or enters later",
                                s.vertices
                            )))
                        }
                    }
                }
            }
            index.insert(s.vertices.clone(), i);
        }
        Ok(())
    }
}

/// Builds the filtration from the active communities of `net` and the
/// positive off-diagonal entries of its matrix.
pub fn wrcf_filtration(net: &CommunityNetwork) -> Result<Filtration> {
    let k = net.k();
    let vertices: Vec<usize> = (0..k).filter(|&c| net.active[c]).collect();
    if vertices.is_empty() {
        return Err(Error::Validation("community network has no active community".into()));
    }
    let mut weights = vec![vec![0.0; k]; k];
    let mut distinct = Vec::new();
    for (a, &u) in vertices.iter().enumerate() {
        for &v in &vertices[a + 1..] {
            let w = 0.5 * (net.m[(u, v)] + net.m[(v, u)]);
            if w > 0.0 {
                weights[u][v] = w;
                weights[v][u] = w;
                distinct.push(w);
            }
        }
    }
    distinct.sort_by(|a, b| b.total_cmp(a));
    distinct.dedup();
    let scale = net.m.sum();

    let mut level_of: BTreeMap<Vec<usize>, usize> =
        vertices.iter().map(|&v| (vec![v], 0)).collect();
    let mut adjacent = vec![vec![false; k]; k];
    for (i, &threshold) in distinct.iter().enumerate() {
        let level = i + 1;
        for &u in &vertices {
            for &v in &vertices {
                if u != v && weights[u][v] >= threshold {
                    adjacent[u][v] = true;
                }
            }
        }
        for clique in maximal_cliques(&adjacent, &vertices) {
            for face in faces_up_to_triangles(&clique) {
                level_of.entry(face).or_insert(level);
            }
        }
    }

    let mut simplices: Vec<Simplex> = level_of
        .into_iter()
        .map(|(vertices, level)| Simplex { vertices, level, value: 0.0 })
        .collect();
    simplices.sort_by(|a, b| {
        (a.level, a.dim(), &a.vertices).cmp(&(b.level, b.dim(), &b.vertices))
    });
    let mut f = Filtration { vertices, simplices, level_weights: distinct, scale, weights };
    for i in 0..f.simplices.len() {
        f.simplices[i].value = f.level_value(f.simplices[i].level);
    }
    Ok(f)
}

fn faces_up_to_triangles(clique: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for a in 0..clique.len() {
        for b in (a + 1)..clique.len() {
            out.push(vec![clique[a], clique[b]]);
            for c in (b + 1)..clique.len() {
                out.push(vec![clique[a], clique[b], clique[c]]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Matrix;

    pub(crate) fn network(k: usize, edges: &[(usize, usize, f64)]) -> CommunityNetwork {
        let mut m = Matrix::zeros(k, k);
        for &(u, v, w) in edges {
            m[(u, v)] = w;
            m[(v, u)] = w;
        }
        CommunityNetwork::from_matrix(m)
    }

    fn summary(f: &Filtration) -> Vec<(Vec<usize>, usize)> {
        f.simplices.iter().map(|s| (s.vertices.clone(), s.level)).collect()
    }

    #[test]
    fn unit_triangle_single_level() {
        let f = wrcf_filtration(&network(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])).unwrap();
        assert_eq!(f.levels(), 1);
        assert_eq!(
            summary(&f),
            vec![
                (vec![0], 0),
                (vec![1], 0),
                (vec![2], 0),
                (vec![0, 1], 1),
                (vec![0, 2], 1),
                (vec![1, 2], 1),
                (vec![0, 1, 2], 1),
            ]
        );
        f.validate().unwrap();
    }

    #[test]
    fn triangle_enters_with_lightest_edge() {
        let f = wrcf_filtration(&network(3, &[(0, 1, 3.0), (1, 2, 2.0), (0, 2, 1.0)])).unwrap();
        assert_eq!(f.level_weights, vec![3.0, 2.0, 1.0]);
        assert_eq!(f.simplices[f.position(&[0, 1, 2]).unwrap()].level, 3);
        assert_eq!(f.simplices[f.position(&[0, 1]).unwrap()].level, 1);
        assert_eq!(f.simplices[f.position(&[1, 2]).unwrap()].level, 2);
        // S = 12, so values are 1 − w/12.
        assert!((f.simplices[f.position(&[0, 2]).unwrap()].value - 11.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn four_cycle_has_no_triangles() {
        let f = wrcf_filtration(&network(
            4,
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)],
        ))
        .unwrap();
        assert_eq!(f.simplices.iter().filter(|s| s.dim() == 1).count(), 4);
        assert_eq!(f.simplices.iter().filter(|s| s.dim() == 2).count(), 0);
    }

    #[test]
    fn zero_network_is_vertex_only_and_inactive_excluded() {
        let mut net = network(3, &[]);
        net.active[1] = false;
        let f = wrcf_filtration(&net).unwrap();
        assert_eq!(summary(&f), vec![(vec![0], 0), (vec![2], 0)]);
        net.active = vec![false; 3];
        assert!(wrcf_filtration(&net).is_err());
    }

    #[test]
    fn validate_catches_late_face() {
        let mut f = wrcf_filtration(&network(2, &[(0, 1, 1.0)])).unwrap();
        f.simplices[1].level = 2;
        f.simplices.swap(1, 2);
        assert!(matches!(f.validate(), Err(Error::FiltrationIntegrity(_))));
    }
}

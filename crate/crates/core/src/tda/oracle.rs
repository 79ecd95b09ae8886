//! Brute-force persistent Betti numbers by GF(2) rank computations. Slow,
//! and only meant as a reference to check the reduction against.

use std::collections::HashMap;

use super::filtration::Filtration;

/// Rank over GF(2) of a set of column vectors, each a list of set rows.
fn gf2_rank(columns: Vec<Vec<usize>>, rows: usize) -> usize {
    let words = rows.div_ceil(64).max(1);
    let mut basis: Vec<Option<Vec<u64>>> = vec![None; rows];
    let mut rank = 0;
    for col in columns {
        let mut bits = vec![0u64; words];
        for r in col {
            bits[r / 64] ^= 1 << (r % 64);
        }
        while let Some(top) = (0..rows).rev().find(|&r| bits[r / 64] >> (r % 64) & 1 == 1) {
            match &basis[top] {
                Some(b) => bits.iter_mut().zip(b).for_each(|(x, y)| *x ^= y),
                None => {
                    basis[top] = Some(bits);
                    rank += 1;
                    break;
                }
            }
        }
    }
    rank
}

fn faces(vertices: &[usize]) -> Vec<Vec<usize>> {
    (0..vertices.len())
        .map(|skip| {
            vertices
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != skip)
                .map(|(_, v)| *v)
                .collect()
        })
        .collect()
}

/// Rank of the boundary map from `dim`-simplices of level ≤ `col_level` onto
/// the `(dim − 1)`-simplices accepted by `keep_row`.
fn boundary_rank(
    f: &Filtration,
    dim: usize,
    col_level: usize,
    keep_row: impl Fn(usize) -> bool,
) -> usize {
    if dim == 0 {
        return 0;
    }
    let rows: HashMap<&[usize], usize> = f
        .simplices
        .iter()
        .filter(|s| s.dim() == dim - 1 && keep_row(s.level))
        .enumerate()
        .map(|(r, s)| (s.vertices.as_slice(), r))
        .collect();
    let columns = f
        .simplices
        .iter()
        .filter(|s| s.dim() == dim && s.level <= col_level)
        .map(|s| {
            faces(&s.vertices)
                .iter()
                .filter_map(|face| rows.get(face.as_slice()).copied())
                .collect()
        })
        .collect();
    gf2_rank(columns, rows.len())
}

/// Rank of the `dim`-th persistent homology group from level `i` to level
/// `j ≥ i`: the `dim`-cycles present at `i` modulo boundaries present at `j`.
pub fn persistent_betti_oracle(f: &Filtration, i: usize, j: usize, dim: usize) -> usize {
    assert!(i <= j, "persistent Betti number needs i <= j");
    let chains = f.simplices.iter().filter(|s| s.dim() == dim && s.level <= i).count();
    let cycles = chains - boundary_rank(f, dim, i, |l| l <= i);
    let boundaries = boundary_rank(f, dim + 1, j, |l| l <= j);
    // Boundaries at j that do not lie inside the level-i complex.
    let outside = boundary_rank(f, dim + 1, j, |l| l > i && l <= j);
    cycles - (boundaries - outside)
}

/// Diagram of one dimension as sorted `(birth_level, death_level)` pairs,
/// reconstructed from multiplicities of persistent Betti numbers.
pub fn oracle_level_multiset(f: &Filtration, dim: usize) -> Vec<(usize, Option<usize>)> {
    let m = f.levels();
    let beta = |i: isize, j: usize| -> isize {
        if i < 0 {
            0
        } else {
            persistent_betti_oracle(f, i as usize, j, dim) as isize
        }
    };
    let mut out = Vec::new();
    for i in 0..=m {
        let ii = i as isize;
        for j in (i + 1)..=m {
            let mu = beta(ii, j - 1) - beta(ii, j) - beta(ii - 1, j - 1) + beta(ii - 1, j);
            assert!(mu >= 0, "negative multiplicity");
            out.extend(std::iter::repeat_n((i, Some(j)), mu as usize));
        }
        let essential = beta(ii, m) - beta(ii - 1, m);
        assert!(essential >= 0, "negative essential multiplicity");
        out.extend(std::iter::repeat_n((i, None), essential as usize));
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::community::CommunityNetwork;
    use crate::tda::wrcf_filtration;
    use crate::tensor::Matrix;

    fn filtration(k: usize, edges: &[(usize, usize, f64)]) -> Filtration {
        let mut m = Matrix::zeros(k, k);
        for &(u, v, w) in edges {
            m[(u, v)] = w;
            m[(v, u)] = w;
        }
        wrcf_filtration(&CommunityNetwork::from_matrix(m)).unwrap()
    }

    #[test]
    fn connected_final_complex_has_one_component() {
        let f = filtration(3, &[(0, 1, 3.0), (1, 2, 2.0), (0, 2, 1.0)]);
        assert_eq!(persistent_betti_oracle(&f, 3, 3, 0), 1);
        assert_eq!(persistent_betti_oracle(&f, 0, 0, 0), 3);
        assert_eq!(persistent_betti_oracle(&f, 0, 1, 0), 2);
    }

    #[test]
    fn filled_triangle_and_square() {
        let tri = filtration(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]);
        assert_eq!(persistent_betti_oracle(&tri, 1, 1, 1), 0);
        let square = filtration(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)]);
        assert_eq!(persistent_betti_oracle(&square, 1, 1, 1), 1);
    }

    #[test]
    fn gf2_rank_cancels_duplicates() {
        assert_eq!(gf2_rank(vec![vec![0, 1], vec![1, 2], vec![0, 2]], 3), 2);
        assert_eq!(gf2_rank(vec![vec![], vec![70]], 80), 1);
    }
}

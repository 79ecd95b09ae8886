//! Hungarian (Kuhn–Munkres) minimum-cost assignment on dense `f64` costs.

use crate::tensor::Matrix;

/// Minimum-cost assignment of rows to columns.
///
/// Returns `(assignment, cost)` where `assignment[r]` is the column matched
/// to row `r`. With more rows than columns the surplus rows get `None`.
pub fn min_cost_assignment(cost: &Matrix) -> (Vec<Option<usize>>, f64) {
    let (rows, cols) = cost.shape();
    if rows == 0 || cols == 0 {
        return (vec![None; rows], 0.0);
    }
    if rows > cols {
        let (col_to_row, total) = min_cost_assignment(&cost.transpose());
        let mut out = vec![None; rows];
        for (c, r) in col_to_row.into_iter().enumerate() {
            if let Some(r) = r {
                out[r] = Some(c);
            }
        }
        return (out, total);
    }

    // Shortest augmenting path with potentials, 1-based with a virtual
    // column 0.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut matched_row = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for r in 1..=rows {
        matched_row[0] = r;
        let mut j0 = 0usize;
        let mut min_to = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let reduced = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    way[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![None; rows];
    for j in 1..=cols {
        if matched_row[j] != 0 {
            assignment[matched_row[j] - 1] = Some(j - 1);
        }
    }
    let total = assignment
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| cost[(r, c)]))
        .sum();
    (assignment, total)
}

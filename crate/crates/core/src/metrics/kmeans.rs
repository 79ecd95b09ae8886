use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

pub const MAX_ITER: usize = 300;
pub const TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct KMeans {
    pub labels: Vec<usize>,
    /// `k × dim` centroids.
    pub centers: Matrix,
    pub inertia: f64,
    pub iterations: usize,
}

fn sq_dist(points: &Matrix, i: usize, centers: &Matrix, c: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(centers.row(c).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn plus_plus_seeds(points: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = points.nrows();
    let mut centers = Matrix::zeros(k, points.ncols());
    let first = rng.random_range(0..n);
    centers.set_row(0, &points.row(first));
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in closest.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.set_row(c, &points.row(pick));
        for (i, d) in closest.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, &centers, c));
        }
    }
    centers
}

/// Lloyd's algorithm with k-means++ seeding on the rows of `points`.
pub fn kmeans(points: &Matrix, k: usize, seed: u64) -> Result<KMeans> {
    let n = points.nrows();
    if k == 0 {
        return Err(Error::Validation("k-means needs k >= 1".into()));
    }
    if n < k {
        return Err(Error::Validation(format!("k-means with k = {k} on {n} points")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_seeds(points, k, &mut rng);
    let mut labels = vec![0usize; n];
    let mut iterations = 0;

    for iter in 0..MAX_ITER {
        iterations = iter + 1;
        for (i, label) in labels.iter_mut().enumerate() {
            let mut best = (f64::INFINITY, 0);
            for c in 0..k {
                let d = sq_dist(points, i, &centers, c);
                if d < best.0 {
                    best = (d, c);
                }
            }
            *label = best.1;
        }

        let mut sums = Matrix::zeros(k, points.ncols());
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            let mut row = sums.row_mut(l);
            row += points.row(i);
        }
        let mut updated = centers.clone();
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                updated.set_row(c, &(sums.row(c) / count as f64));
            } else {
                // Empty cluster: move it onto the point farthest from its center.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(points, a, &centers, labels[a])
                            .total_cmp(&sq_dist(points, b, &centers, labels[b]))
                    })
                    .expect("n >= k >= 1");
                updated.set_row(c, &points.row(far));
            }
        }
        let shift = (&updated - &centers).norm_squared();
        centers = updated;
        if shift <= TOL {
            break;
        }
    }

    for (i, label) in labels.iter_mut().enumerate() {
        *label = (0..k)
            .min_by(|&a, &b| sq_dist(points, i, &centers, a).total_cmp(&sq_dist(points, i, &centers, b)))
            .expect("k >= 1");
    }
    let inertia = labels.iter().enumerate().map(|(i, &l)| sq_dist(points, i, &centers, l)).sum();
    Ok(KMeans { labels, centers, inertia, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_distant_clouds() {
        let points = Matrix::from_fn(20, 2, |i, j| {
            let base = if i < 10 { 0.0 } else { 100.0 };
            base + ((i * 7 + j * 3) % 5) as f64 * 0.1
        });
        let km = kmeans(&points, 2, 3).unwrap();
        assert!(km.labels[..10].iter().all(|&l| l == km.labels[0]));
        assert!(km.labels[10..].iter().all(|&l| l == km.labels[10]));
        assert_ne!(km.labels[0], km.labels[10]);
    }

    #[test]
    fn single_cluster_and_errors() {
        let points = Matrix::from_fn(5, 3, |i, j| (i + j) as f64);
        assert!(kmeans(&points, 1, 0).unwrap().labels.iter().all(|&l| l == 0));
        assert!(kmeans(&points, 6, 0).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let points = crate::tensor::glorot_init(40, 3, 8);
        let a = kmeans(&points, 4, 5).unwrap();
        let b = kmeans(&points, 4, 5).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.centers, b.centers);
    }
}

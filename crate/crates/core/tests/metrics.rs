mod common;

use std::collections::HashMap;

use common::rng;
use proptest::prelude::*;
use rand::Rng;
use toporeg::metrics::{accuracy, ari, kmeans, modularity, nmi};
use toporeg::{Matrix, SnapshotGraph};

/// Best partial one-to-one relabeling, by enumeration.
fn accuracy_oracle(truth: &[usize], pred: &[usize]) -> f64 {
    let mut t: Vec<usize> = truth.to_vec();
    t.sort_unstable();
    t.dedup();
    let mut p: Vec<usize> = pred.to_vec();
    p.sort_unstable();
    p.dedup();
    fn go(i: usize, p: &[usize], t: &[usize], used: &mut Vec<bool>, map: &mut Vec<Option<usize>>, truth: &[usize], pred: &[usize]) -> usize {
        if i == p.len() {
            return truth
                .iter()
                .zip(pred)
                .filter(|(a, b)| map[p.iter().position(|x| x == *b).unwrap()] == Some(**a))
                .count();
        }
        map[i] = None;
        let mut best = go(i + 1, p, t, used, map, truth, pred);
        for j in 0..t.len() {
            if !used[j] {
                used[j] = true;
                map[i] = Some(t[j]);
                best = best.max(go(i + 1, p, t, used, map, truth, pred));
                used[j] = false;
            }
        }
        map[i] = None;
        best
    }
    let hits = go(0, &p, &t, &mut vec![false; t.len()], &mut vec![None; p.len()], truth, pred);
    hits as f64 / truth.len() as f64
}

fn entropy_of<K: std::hash::Hash + Eq>(items: impl Iterator<Item = K>, n: f64) -> f64 {
    let mut counts: HashMap<K, f64> = HashMap::new();
    for k in items {
        *counts.entry(k).or_default() += 1.0;
    }
    counts.values().map(|c| -(c / n) * (c / n).ln()).sum()
}

/// `MI = H(T) + H(P) − H(T, P)` over the arithmetic mean of the entropies.
fn nmi_oracle(truth: &[usize], pred: &[usize]) -> f64 {
    let n = truth.len() as f64;
    let ht = entropy_of(truth.iter(), n);
    let hp = entropy_of(pred.iter(), n);
    let joint = entropy_of(truth.iter().zip(pred), n);
    (ht + hp - joint) / (0.5 * (ht + hp))
}

/// Pair-counting form over every node pair.
fn ari_oracle(truth: &[usize], pred: &[usize]) -> f64 {
    let (mut n11, mut n10, mut n01, mut n00) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..truth.len() {
        for j in (i + 1)..truth.len() {
            match (truth[i] == truth[j], pred[i] == pred[j]) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
    }
    2.0 * (n00 * n11 - n01 * n10) / ((n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11))
}

/// `(1/2m) Σ_ij [W_ij − d_i d_j / 2m] δ(c_i, c_j)`.
fn modularity_oracle(g: &SnapshotGraph, labels: &[usize]) -> f64 {
    let w = g.weights();
    let two_m = w.sum();
    let d: Vec<f64> = (0..w.nrows()).map(|i| w.row(i).sum()).collect();
    let mut q = 0.0;
    for i in 0..w.nrows() {
        for j in 0..w.nrows() {
            if labels[i] == labels[j] {
                q += w[(i, j)] - d[i] * d[j] / two_m;
            }
        }
    }
    q / two_m
}

fn labelings(max_n: usize, max_k: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2..=max_n, 1..=max_k, 1..=max_k).prop_flat_map(|(n, kt, kp)| {
        (prop::collection::vec(0..kt, n), prop::collection::vec(0..kp, n))
    })
}

fn nontrivial(labels: &[usize]) -> bool {
    labels.iter().any(|l| *l != labels[0])
}

proptest! {
    #[test]
    fn accuracy_matches_enumeration((t, p) in labelings(12, 4)) {
        prop_assert!((accuracy(&t, &p).unwrap() - accuracy_oracle(&t, &p)).abs() < 1e-12);
    }

    #[test]
    fn nmi_matches_entropy_identity((t, p) in labelings(30, 5)) {
        prop_assume!(nontrivial(&t) && nontrivial(&p));
        prop_assert!((nmi(&t, &p).unwrap() - nmi_oracle(&t, &p).clamp(0.0, 1.0)).abs() < 1e-10);
    }

    #[test]
    fn ari_matches_pair_counting((t, p) in labelings(30, 5)) {
        let expected = ari_oracle(&t, &p);
        prop_assume!(expected.is_finite());
        prop_assert!((ari(&t, &p).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn scores_ignore_label_names((t, p) in labelings(20, 4), shift in 1usize..10) {
        // Relabel the prediction by a bijection.
        let renamed: Vec<usize> = p.iter().map(|l| (l + shift) * 7).collect();
        prop_assert_eq!(accuracy(&t, &p).unwrap(), accuracy(&t, &renamed).unwrap());
        prop_assert_eq!(nmi(&t, &p).unwrap(), nmi(&t, &renamed).unwrap());
        prop_assert_eq!(ari(&t, &p).unwrap(), ari(&t, &renamed).unwrap());
    }

    #[test]
    fn symmetric_scores((t, p) in labelings(20, 4)) {
        prop_assert!((nmi(&t, &p).unwrap() - nmi(&p, &t).unwrap()).abs() < 1e-12);
        prop_assert!((ari(&t, &p).unwrap() - ari(&p, &t).unwrap()).abs() < 1e-12);
        let acc = accuracy(&t, &p).unwrap();
        prop_assert!((0.0..=1.0).contains(&acc));
    }

    #[test]
    fn modularity_matches_double_sum(seed in any::<u64>(), n in 3usize..15, k in 1usize..5) {
        let mut r = rng(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if r.random_bool(0.4) {
                    edges.push((u, v, r.random_range(0.1..3.0)));
                }
            }
        }
        prop_assume!(!edges.is_empty());
        let g = SnapshotGraph::with_numeric_ids(n, edges, None).unwrap();
        let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
        prop_assert!((modularity(&g, &labels).unwrap() - modularity_oracle(&g, &labels)).abs() < 1e-12);
    }
}

#[test]
fn identical_partitions_score_one() {
    let t = [0, 0, 1, 1, 2, 2, 2];
    assert_eq!(accuracy(&t, &t).unwrap(), 1.0);
    assert!((nmi(&t, &t).unwrap() - 1.0).abs() < 1e-12);
    assert!((ari(&t, &t).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn random_partitions_have_zero_mean_ari() {
    let mut r = rng(21);
    let draws = 2000;
    let mean: f64 = (0..draws)
        .map(|_| {
            let t: Vec<usize> = (0..100).map(|_| r.random_range(0..4)).collect();
            let p: Vec<usize> = (0..100).map(|_| r.random_range(0..4)).collect();
            ari(&t, &p).unwrap()
        })
        .sum::<f64>()
        / draws as f64;
    assert!(mean.abs() < 0.005, "mean ARI {mean}");
}

#[test]
fn kmeans_recovers_separated_blobs_and_is_seeded() {
    let mut r = rng(22);
    let centers = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)];
    let truth: Vec<usize> = (0..60).map(|i| i % 3).collect();
    let points = Matrix::from_fn(60, 2, |i, j| {
        let c = centers[truth[i]];
        (if j == 0 { c.0 } else { c.1 }) + r.random_range(-1.0..1.0)
    });
    let a = kmeans(&points, 3, 5).unwrap();
    assert_eq!(accuracy(&truth, &a.labels).unwrap(), 1.0);
    assert_eq!(a.labels, kmeans(&points, 3, 5).unwrap().labels);
}

//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toporeg::community::{community_adjacency_on_tape, score_network_on_tape, CommunityNetwork};
use toporeg::gae::{encode, reconstruction_loss, Features, ReconstructionTarget};
use toporeg::graph::{gaussian_partition_graph, PartitionParams};
use toporeg::mfc::{clustering_loss, compute_assignment, MfcConfig, SnapshotModel};
use toporeg::pipeline::{model_network, topo_term};
use toporeg::tda::DiagramPoint;
use toporeg::tensor::{central_difference, max_relative_error, regularized_pinv};
use toporeg::topo_loss::{topo_gradient_with, ComparisonDiagram, SnapshotTopology, WassersteinConfig};
use toporeg::{Matrix, Result, SnapshotGraph, Tape, Var};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Min over every augmented matching, by enumeration. Each point of `a`
/// goes to an unused point of `b` or to the diagonal; leftover points of
/// `b` go to the diagonal.
pub fn brute_force_wasserstein(a: &[DiagramPoint], b: &[DiagramPoint], cfg: WassersteinConfig) -> f64 {
    fn go(i: usize, a: &[DiagramPoint], b: &[DiagramPoint], used: &mut Vec<bool>, cfg: WassersteinConfig) -> f64 {
        if i == a.len() {
            return b
                .iter()
                .zip(used.iter())
                .filter(|(_, u)| !**u)
                .map(|(p, _)| cfg.to_diagonal(p).powf(cfg.p))
                .sum();
        }
        let mut best = cfg.to_diagonal(&a[i]).powf(cfg.p) + go(i + 1, a, b, used, cfg);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                let c = cfg.ground(&a[i], &b[j]).powf(cfg.p) + go(i + 1, a, b, used, cfg);
                used[j] = false;
                best = best.min(c);
            }
        }
        best
    }
    go(0, a, b, &mut vec![false; b.len()], cfg).powf(1.0 / cfg.p)
}

/// Diagram of up to `max_points` points on a grid of multiples of 1/8, so
/// sums of costs are exact in floating point.
pub fn grid_diagram(rng: &mut ChaCha8Rng, max_points: usize) -> ComparisonDiagram {
    let n = rng.random_range(0..=max_points);
    let points = (0..n)
        .map(|_| {
            let b = rng.random_range(0..8) as f64 / 8.0;
            let d = b + rng.random_range(1..=8) as f64 / 8.0;
            DiagramPoint::new(b, d)
        })
        .collect();
    ComparisonDiagram::new(0, points)
}

pub fn random_diagram(rng: &mut ChaCha8Rng, max_points: usize) -> ComparisonDiagram {
    let n = rng.random_range(0..=max_points);
    let points = (0..n)
        .map(|_| {
            let b: f64 = rng.random_range(0.0..1.0);
            DiagramPoint::new(b, b + rng.random_range(0.0..1.0))
        })
        .collect();
    ComparisonDiagram::new(0, points)
}

/// Symmetric network from an upper-triangle weight list in (0,1),(0,2),…
/// order.
pub fn network_from_upper(k: usize, upper: &[f64]) -> CommunityNetwork {
    let mut m = Matrix::zeros(k, k);
    let mut it = upper.iter();
    for u in 0..k {
        for v in (u + 1)..k {
            let w = *it.next().expect("enough weights");
            m[(u, v)] = w;
            m[(v, u)] = w;
        }
    }
    CommunityNetwork::from_matrix(m)
}

/// Every assignment of `values` to the `k(k−1)/2` vertex pairs.
pub fn all_weightings(k: usize, values: &[f64]) -> Vec<Vec<f64>> {
    let pairs = k * (k - 1) / 2;
    let mut out = vec![Vec::new()];
    for _ in 0..pairs {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    out
}

/// Worst norm-relative error between the tape gradient and central
/// differences of `Σ R ⊙ build(inputs)` for a fixed random projection `R`,
/// over every input.
pub fn gradient_error(
    seed: u64,
    inputs: &[Matrix],
    build: impl Fn(&mut Tape, &[Var]) -> Result<Var>,
) -> f64 {
    let project = |tape: &mut Tape, out: Var| -> Var {
        let (r, c) = tape.shape(out);
        let weights = random_matrix(&mut rng(seed ^ 0x5eed), r, c, -1.0, 1.0);
        let w = tape.leaf(weights).unwrap();
        let prod = tape.mul(out, w).unwrap();
        tape.sum(prod).unwrap()
    };
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|m| tape.leaf(m.clone()).unwrap()).collect();
    let out = build(&mut tape, &vars).unwrap();
    let loss = project(&mut tape, out);
    let grads = tape.backward(loss).unwrap();

    let mut worst: f64 = 0.0;
    for (k, input) in inputs.iter().enumerate() {
        let numeric = central_difference(input, 1e-5, |probe| {
            let mut tape = Tape::new();
            let vars: Vec<Var> = inputs
                .iter()
                .enumerate()
                .map(|(j, m)| tape.leaf(if j == k { probe.clone() } else { m.clone() }).unwrap())
                .collect();
            let out = build(&mut tape, &vars).unwrap();
            let loss = project(&mut tape, out);
            tape.scalar(loss)
        });
        worst = worst.max(max_relative_error(&grads.get(vars[k]), &numeric, 1e-8));
    }
    worst
}

type Build = Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var>>;

fn small_graph(seed: u64) -> SnapshotGraph {
    let params = PartitionParams { k: 3, size_mean: 6.0, size_std: 1.0, p_in: 0.7, p_out: 0.1 };
    gaussian_partition_graph(&params, seed).unwrap()
}

/// Keeps entries at least `gap` away from zero, where relu has its kink.
fn off_kink(m: Matrix, gap: f64) -> Matrix {
    m.map(|v| if v.abs() < gap { v.signum().max(0.0) * 0.5 + 0.25 } else { v })
}

/// Worst central-difference error of every differentiable building block
/// over `instances` random inputs each.
pub fn primitive_gradient_errors(instances: u64) -> Vec<(&'static str, f64)> {
    let g = small_graph(1);
    let n = g.node_count();
    let a_hat = g.normalized_adjacency().matrix().clone();
    let target = ReconstructionTarget::from_graph(&g).unwrap();
    let bce_target = Matrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 3 == 0) as u8 as f64);

    type Inputs = Box<dyn Fn(&mut ChaCha8Rng) -> Vec<Matrix>>;
    let uniform = |shapes: &'static [(usize, usize)]| -> Inputs {
        Box::new(move |r| shapes.iter().map(|&(a, b)| random_matrix(r, a, b, -1.0, 1.0)).collect())
    };
    let a_enc = a_hat.clone();
    let a_dense = a_hat.clone();
    let g_adj = g.clone();
    let g_score = g.clone();
    let cases: Vec<(&'static str, Inputs, Build)> = vec![
        ("matmul", uniform(&[(3, 4), (4, 2)]), Box::new(|t, v| t.matmul(v[0], v[1]))),
        ("transpose", uniform(&[(3, 4)]), Box::new(|t, v| t.transpose(v[0]))),
        ("add", uniform(&[(3, 3), (3, 3)]), Box::new(|t, v| t.add(v[0], v[1]))),
        ("sub", uniform(&[(3, 3), (3, 3)]), Box::new(|t, v| t.sub(v[0], v[1]))),
        ("scale", uniform(&[(2, 5)]), Box::new(|t, v| t.scale(v[0], -2.5))),
        ("mul", uniform(&[(3, 2), (3, 2)]), Box::new(|t, v| t.mul(v[0], v[1]))),
        ("sigmoid", uniform(&[(4, 3)]), Box::new(|t, v| t.sigmoid(v[0]))),
        ("relu", Box::new(|r| vec![off_kink(random_matrix(r, 4, 4, -1.0, 1.0), 1e-3)]), Box::new(|t, v| t.relu(v[0]))),
        (
            "inverse",
            Box::new(|r| vec![random_matrix(r, 4, 4, -0.3, 0.3) + Matrix::identity(4, 4) * 2.0]),
            Box::new(|t, v| t.inverse(v[0])),
        ),
        ("row_minmax", uniform(&[(5, 4)]), Box::new(|t, v| t.row_minmax(v[0]))),
        ("mse", uniform(&[(4, 3), (4, 3)]), Box::new(|t, v| t.mse(v[0], v[1]))),
        (
            "weighted_bce_with_logits",
            uniform(&[(5, 5)]),
            Box::new(move |t, v| t.weighted_bce_with_logits(v[0], bce_target.clone(), 2.7)),
        ),
        ("sum", uniform(&[(4, 3)]), Box::new(|t, v| t.sum(v[0]))),
        ("regularized_pinv", uniform(&[(3, 6)]), Box::new(|t, v| regularized_pinv(t, v[0], 1e-6))),
        ("regularized_pinv (damped)", uniform(&[(3, 6)]), Box::new(|t, v| regularized_pinv(t, v[0], 0.5))),
        (
            "encoder + reconstruction",
            Box::new(move |r| vec![random_matrix(r, n, 4, -1.0, 1.0)]),
            Box::new(move |t, v| {
                let a = t.leaf(a_enc.clone())?;
                let z = encode(t, a, Features::Identity, v[0])?;
                reconstruction_loss(t, &target, z)
            }),
        ),
        (
            "encoder with dense features",
            Box::new(move |r| vec![random_matrix(r, n, 3, -1.0, 1.0), random_matrix(r, 3, 4, -1.0, 1.0)]),
            Box::new(move |t, v| {
                let a = t.leaf(a_dense.clone())?;
                encode(t, a, Features::Dense(v[0]), v[1])
            }),
        ),
        (
            "assignment + clustering loss",
            uniform(&[(8, 4), (3, 4)]),
            Box::new(|t, v| {
                let (_, q) = compute_assignment(t, v[0], v[1], 1e-6)?;
                clustering_loss(t, v[0], q, v[1])
            }),
        ),
        (
            "community_adjacency",
            Box::new(move |r| vec![random_matrix(r, n, 3, 0.0, 1.0)]),
            Box::new(move |t, v| community_adjacency_on_tape(t, v[0], &g_adj)),
        ),
        (
            "score network (relu, argmax filter, adjacency)",
            Box::new(move |r| vec![off_kink(random_matrix(r, n, 3, -0.3, 0.7), 1e-3)]),
            Box::new(move |t, v| {
                // The argmax mask is a constant of the recorded pass.
                let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
                score_network_on_tape(t, v[0], &labels, &g_score)
            }),
        ),
    ];
    cases
        .into_iter()
        .map(|(name, inputs, build)| {
            let worst = (0..instances)
                .map(|seed| gradient_error(seed, &inputs(&mut rng(seed)), &build))
                .fold(0.0, f64::max);
            (name, worst)
        })
        .collect()
}

fn chain_model(g: &SnapshotGraph, seed: u64) -> SnapshotModel {
    let cfg = MfcConfig { k: 3, embed_dim: 4, seed, ..Default::default() };
    let mut m = SnapshotModel::new(g, &cfg).unwrap();
    for _ in 0..30 {
        m.warmup_step().unwrap();
    }
    m.init_centers(seed).unwrap();
    m
}

fn local_topo_loss(m: &SnapshotModel, g: &SnapshotGraph, snaps: &[SnapshotTopology]) -> f64 {
    let here = SnapshotTopology::new(model_network(m, g).unwrap()).unwrap();
    topo_gradient_with(&here, snaps, 1, WassersteinConfig::default()).unwrap().0
}

/// Tape gradient of the topological term of the middle of three random
/// snapshot models against central differences of the full recomputation
/// (network, filtration, persistence, matching), for encoder weights and
/// centers. `None` when the loss is zero or a kink (label, pairing or
/// matching switch) lies within reach of the probe.
pub fn topo_chain_error(seed: u64) -> Option<(f64, f64)> {
    let g = small_graph(4);
    let models: Vec<_> = (0..3).map(|i| chain_model(&g, seed * 3 + i)).collect();
    let snaps: Vec<_> = models
        .iter()
        .map(|m| SnapshotTopology::new(model_network(m, &g).unwrap()).unwrap())
        .collect();
    let mut tape = Tape::new();
    let f = models[1].forward(&mut tape).unwrap();
    let (term, value) = topo_term(&mut tape, &f, &g, &snaps, 1, 1.0, WassersteinConfig::default()).unwrap();
    assert!((tape.scalar(term) - value).abs() < 1e-12, "surrogate value differs from the loss");
    if value == 0.0 {
        return None;
    }
    let grads = tape.backward(term).unwrap();
    let with_weight = |w: &Matrix| {
        let mut m = models[1].clone();
        m.encoder.weight = w.clone();
        local_topo_loss(&m, &g, &snaps)
    };
    let with_centers = |c: &Matrix| {
        let mut m = models[1].clone();
        m.centers.centers = c.clone();
        local_topo_loss(&m, &g, &snaps)
    };
    let (w0, c0) = (&models[1].encoder.weight, &models[1].centers.centers);
    let (nw, nw_coarse) = (central_difference(w0, 1e-7, with_weight), central_difference(w0, 1e-6, with_weight));
    let (nc, nc_coarse) = (central_difference(c0, 1e-7, with_centers), central_difference(c0, 1e-6, with_centers));
    if max_relative_error(&nw, &nw_coarse, 1e-8) > 1e-4 || max_relative_error(&nc, &nc_coarse, 1e-8) > 1e-4 {
        return None;
    }
    Some((
        max_relative_error(&grads.get(f.weight), &nw, 1e-8),
        max_relative_error(&grads.get(f.centers), &nc, 1e-8),
    ))
}

//! Wasserstein distances between persistence diagrams and the temporal
//! topological loss that ties neighboring snapshots together.
//!
//! For snapshots `0..=T` the loss is
//! `Σ_{t=1}^{T-1} Σ_dim [W(dgm(t), dgm(t-1)) + W(dgm(t), dgm(t+1))]`, taken
//! literally: a pair of neighbors is counted once for every interior
//! snapshot it is attached to.
//!
//! Gradients go through a frozen matching and a frozen persistence pairing.
//! Each diagram coordinate is the filtration value `1 − w/S` of one edge of
//! the community network (see [`crate::tda::inverse_map`]), so the
//! gradient lands on that edge's weight and, through the normalizer `S`, on
//! every entry of `M`.

use std::fmt::Write as _;

use crate::assignment::min_cost_assignment;
use crate::community::CommunityNetwork;
use crate::error::{Error, Result};
use crate::tda::{
    comparison_points, compute_persistence, wrcf_filtration, DiagramPoint, Filtration,
    PersistenceDiagram,
};
use crate::tensor::{Matrix, Tape, Var};

/// Homology dimensions compared by the loss.
pub const DIMS: [usize; 2] = [0, 1];

/// Transport exponent `p` and ground norm order `q` (`f64::INFINITY` for
/// the max norm).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WassersteinConfig {
    pub p: f64,
    pub q: f64,
}

impl Default for WassersteinConfig {
    fn default() -> Self {
        Self { p: 1.0, q: f64::INFINITY }
    }
}

impl WassersteinConfig {
    fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p.is_finite()) || !(self.q >= 1.0) {
            return Err(Error::Config(format!(
                "wasserstein needs finite p >= 1 and q >= 1, got p={} q={}",
                self.p, self.q
            )));
        }
        Ok(())
    }

    /// Ground distance between two diagram points.
    pub fn ground(&self, a: &DiagramPoint, b: &DiagramPoint) -> f64 {
        let (db, dd) = ((a.birth - b.birth).abs(), (a.death - b.death).abs());
        if self.q.is_infinite() {
            db.max(dd)
        } else {
            (db.powf(self.q) + dd.powf(self.q)).powf(1.0 / self.q)
        }
    }

    /// Ground distance from a point to its projection on the diagonal.
    pub fn to_diagonal(&self, a: &DiagramPoint) -> f64 {
        0.5 * a.persistence() * 2f64.powf(1.0 / self.q)
    }

    /// Gradient of `ground(a, b)` with respect to `a`'s (birth, death).
    /// Ties under the max norm split evenly.
    fn ground_gradient(&self, a: &DiagramPoint, b: &DiagramPoint) -> (f64, f64) {
        let (db, dd) = (a.birth - b.birth, a.death - b.death);
        if self.q.is_infinite() {
            match db.abs().total_cmp(&dd.abs()) {
                std::cmp::Ordering::Greater => (db.signum(), 0.0),
                std::cmp::Ordering::Less => (0.0, dd.signum()),
                std::cmp::Ordering::Equal if db == 0.0 => (0.0, 0.0),
                std::cmp::Ordering::Equal => (0.5 * db.signum(), 0.5 * dd.signum()),
            }
        } else {
            let c = self.ground(a, b);
            if c == 0.0 {
                return (0.0, 0.0);
            }
            let part = |x: f64| x.signum() * x.abs().powf(self.q - 1.0) / c.powf(self.q - 1.0);
            (part(db), part(dd))
        }
    }
}

/// Points of one homology dimension, ready for comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonDiagram {
    pub dim: usize,
    pub points: Vec<DiagramPoint>,
}

impl ComparisonDiagram {
    pub fn new(dim: usize, points: Vec<DiagramPoint>) -> Self {
        Self { dim, points }
    }

    pub fn from_persistence(f: &Filtration, d: &PersistenceDiagram, dim: usize) -> Self {
        Self { dim, points: comparison_points(f, d, dim) }
    }
}

/// One side of a matched pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Matched {
    Point(usize),
    Diagonal,
}

/// Optimal bijection between two diagrams augmented with the diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagramMatching {
    pub pairs: Vec<(Matched, Matched)>,
    /// `Σ ground^p` over the pairs.
    pub total_cost: f64,
}

/// `W_{p,q}` between two diagrams, with the matching that achieves it.
///
/// Solved as an `(n1 + n2)`-square assignment: each point goes to a point of
/// the other diagram or to the diagonal, and diagonal slots pair up with each
/// other for free.
pub fn wasserstein_distance(
    a: &ComparisonDiagram,
    b: &ComparisonDiagram,
    cfg: WassersteinConfig,
) -> Result<(f64, DiagramMatching)> {
    cfg.validate()?;
    if a.dim != b.dim {
        return Err(Error::Validation(format!(
            "comparing a dimension-{} diagram with a dimension-{} diagram",
            a.dim, b.dim
        )));
    }
    let (n1, n2) = (a.points.len(), b.points.len());
    let n = n1 + n2;
    if n == 0 {
        return Ok((0.0, DiagramMatching { pairs: Vec::new(), total_cost: 0.0 }));
    }
    let mut cost = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            cost[(i, j)] = match (i < n1, j < n2) {
                (true, true) => cfg.ground(&a.points[i], &b.points[j]).powf(cfg.p),
                (true, false) => cfg.to_diagonal(&a.points[i]).powf(cfg.p),
                (false, true) => cfg.to_diagonal(&b.points[j]).powf(cfg.p),
                (false, false) => 0.0,
            };
        }
    }
    let (assignment, _) = min_cost_assignment(&cost);
    let mut pairs = Vec::new();
    let mut total_cost = 0.0;
    for (i, j) in assignment.into_iter().enumerate() {
        let j = j.expect("square assignment is perfect");
        let pair = match (i < n1, j < n2) {
            (true, true) => (Matched::Point(i), Matched::Point(j)),
            (true, false) => (Matched::Point(i), Matched::Diagonal),
            (false, true) => (Matched::Diagonal, Matched::Point(j)),
            (false, false) => continue,
        };
        total_cost += cost[(i, j)];
        pairs.push(pair);
    }
    Ok((total_cost.powf(1.0 / cfg.p), DiagramMatching { pairs, total_cost }))
}

/// Gradient of `W(a, b)` with respect to the (birth, death) of every point
/// of `a`, with the matching held fixed.
pub fn point_gradients(
    a: &ComparisonDiagram,
    b: &ComparisonDiagram,
    matching: &DiagramMatching,
    cfg: WassersteinConfig,
) -> Vec<(f64, f64)> {
    let mut grads = vec![(0.0, 0.0); a.points.len()];
    let s = matching.total_cost;
    for &(left, right) in &matching.pairs {
        let Matched::Point(i) = left else { continue };
        let x = &a.points[i];
        let (c, (gb, gd)) = match right {
            Matched::Point(j) => {
                (cfg.ground(x, &b.points[j]), cfg.ground_gradient(x, &b.points[j]))
            }
            Matched::Diagonal => {
                let h = 0.5 * 2f64.powf(1.0 / cfg.q);
                (cfg.to_diagonal(x), (-h, h))
            }
        };
        // dW/dc for W = (Σ c^p)^(1/p).
        let outer = if cfg.p == 1.0 {
            1.0
        } else if s == 0.0 || c == 0.0 {
            0.0
        } else {
            s.powf(1.0 / cfg.p - 1.0) * c.powf(cfg.p - 1.0)
        };
        grads[i] = (outer * gb, outer * gd);
    }
    grads
}

/// Community network of one snapshot with its filtration and diagrams.
#[derive(Clone, Debug)]
pub struct SnapshotTopology {
    pub network: CommunityNetwork,
    pub filtration: Filtration,
    pub persistence: PersistenceDiagram,
    /// Comparison diagrams indexed like [`DIMS`].
    pub diagrams: Vec<ComparisonDiagram>,
}

impl SnapshotTopology {
    pub fn new(network: CommunityNetwork) -> Result<Self> {
        let filtration = wrcf_filtration(&network)?;
        let persistence = compute_persistence(&filtration)?;
        let diagrams = DIMS
            .iter()
            .map(|&dim| ComparisonDiagram::from_persistence(&filtration, &persistence, dim))
            .collect();
        Ok(Self { network, filtration, persistence, diagrams })
    }
}

/// Distances of one interior snapshot to its two neighbors in one dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TopoTerm {
    pub t: usize,
    pub dim: usize,
    pub w_prev: f64,
    pub w_next: f64,
}

impl TopoTerm {
    pub fn value(&self) -> f64 {
        self.w_prev + self.w_next
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TopoLossReport {
    pub terms: Vec<TopoTerm>,
    pub total: f64,
}

impl TopoLossReport {
    /// `t dim W_prev W_next loss_term` rows, tab separated, with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t\tdim\tW_prev\tW_next\tloss_term\n");
        for term in &self.terms {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                term.t,
                term.dim,
                term.w_prev,
                term.w_next,
                term.value()
            )
            .expect("string write");
        }
        out
    }
}

/// The temporal loss over all interior snapshots.
pub fn topo_loss(snaps: &[SnapshotTopology], cfg: WassersteinConfig) -> Result<TopoLossReport> {
    if snaps.len() < 3 {
        log::warn!("topological loss needs at least 3 snapshots, got {}", snaps.len());
        return Ok(TopoLossReport::default());
    }
    let mut report = TopoLossReport::default();
    for t in 1..snaps.len() - 1 {
        for (slot, &dim) in DIMS.iter().enumerate() {
            let here = &snaps[t].diagrams[slot];
            let (w_prev, _) = wasserstein_distance(here, &snaps[t - 1].diagrams[slot], cfg)?;
            let (w_next, _) = wasserstein_distance(here, &snaps[t + 1].diagrams[slot], cfg)?;
            let term = TopoTerm { t, dim, w_prev, w_next };
            report.total += term.value();
            report.terms.push(term);
        }
    }
    Ok(report)
}

/// Number of times the distance between snapshots `t` and `u = t ± 1`
/// appears in the loss: once per interior endpoint.
fn pair_multiplicity(t: usize, u: usize, len: usize) -> usize {
    let interior = |s: usize| s > 0 && s + 1 < len;
    usize::from(interior(t)) + usize::from(interior(u))
}

/// Part of the loss that depends on snapshot `t`'s diagrams, and its
/// gradient with respect to `t`'s community matrix `M`. Neighbors are
/// constants.
pub fn topo_gradient(
    snaps: &[SnapshotTopology],
    t: usize,
    cfg: WassersteinConfig,
) -> Result<(f64, Matrix)> {
    topo_gradient_with(&snaps[t], snaps, t, cfg)
}

/// [`topo_gradient`] with `here` standing in for `snaps[t]`.
pub fn topo_gradient_with(
    here: &SnapshotTopology,
    snaps: &[SnapshotTopology],
    t: usize,
    cfg: WassersteinConfig,
) -> Result<(f64, Matrix)> {
    let k = here.network.k();
    let mut grad = Matrix::zeros(k, k);
    let mut loss = 0.0;
    if snaps.len() < 3 {
        return Ok((loss, grad));
    }
    let neighbors = [t.checked_sub(1), (t + 1 < snaps.len()).then_some(t + 1)];
    for u in neighbors.into_iter().flatten() {
        let mult = pair_multiplicity(t, u, snaps.len()) as f64;
        if mult == 0.0 {
            continue;
        }
        for slot in 0..DIMS.len() {
            let (a, b) = (&here.diagrams[slot], &snaps[u].diagrams[slot]);
            let (w, matching) = wasserstein_distance(a, b, cfg)?;
            loss += mult * w;
            for (point, (gb, gd)) in a.points.iter().zip(point_gradients(a, b, &matching, cfg)) {
                if let Some(edge) = point.birth_edge {
                    add_value_gradient(&here.filtration, edge, mult * gb, &mut grad);
                }
                if let Some(edge) = point.death_edge {
                    add_value_gradient(&here.filtration, edge, mult * gd, &mut grad);
                }
            }
        }
    }
    Ok((loss, grad))
}

/// Adds `coeff · ∂v/∂M` for the filtration value `v = 1 − w/S` of `edge`,
/// where `w = (M_uv + M_vu)/2` and `S = Σ M`.
fn add_value_gradient(f: &Filtration, (u, v): (usize, usize), coeff: f64, grad: &mut Matrix) {
    if coeff == 0.0 {
        return;
    }
    let s = f.scale;
    let w = f.weights[u][v];
    grad.add_scalar_mut(coeff * w / (s * s));
    grad[(u, v)] -= coeff * 0.5 / s;
    grad[(v, u)] -= coeff * 0.5 / s;
}

/// Records a term whose value is `value` and whose gradient with respect to
/// `m` is `grad`: `Σ grad ⊙ m` shifted by a constant.
pub fn linear_surrogate(tape: &mut Tape, m: Var, grad: &Matrix, value: f64) -> Result<Var> {
    let current = tape.value(m).component_mul(grad).sum();
    let g = tape.leaf(grad.clone())?;
    let weighted = tape.mul(g, m)?;
    let summed = tape.sum(weighted)?;
    let offset = tape.leaf(Matrix::from_element(1, 1, value - current))?;
    tape.add(summed, offset)
}

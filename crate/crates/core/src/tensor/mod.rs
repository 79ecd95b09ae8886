//! Dense reverse-mode differentiation over `f64` matrices.
//!
//! A [`Tape`] records primitive applications in creation order; [`Var`] is a
//! copyable handle into it. One tape serves exactly one forward/backward
//! pass: parameters live outside the tape as plain matrices and are
//! re-registered as leaves every step.

mod gradcheck;
mod init;
mod linalg;
mod optim;

pub use gradcheck::{central_difference, max_relative_error};
pub use init::glorot_init;
pub use linalg::{invert, read_matrix, write_matrix, SINGULAR_PIVOT};
pub use optim::{Adam, AdamConfig};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Handle to a matrix recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, f64),
    Mul(Var, Var),
    Sigmoid(Var),
    Relu(Var),
    Inverse(Var),
    /// Per-row (argmin, argmax); `None` marks a constant row.
    RowMinMax(Var, Vec<Option<(usize, usize)>>),
    Mse(Var, Var),
    BceWithLogits { logits: Var, target: Matrix, pos_weight: f64 },
    Sum(Var),
}

struct Node {
    value: Matrix,
    op: Op,
}

/// Record of a forward pass.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
}

/// ∂loss/∂node for every node of a tape.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// Gradient of `v`, zeros when `v` does not reach the loss.
    pub fn get(&self, v: Var) -> Matrix {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shapes[v.0];
                Matrix::zeros(r, c)
            }
        }
    }

    pub fn is_reachable(&self, v: Var) -> bool {
        self.grads[v.0].is_some()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn dims(m: &Matrix) -> String {
    format!("{}x{}", m.nrows(), m.ncols())
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// Scalar value of a 1x1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[(0, 0)]
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Matrix, op: Op, name: &'static str) -> Result<Var> {
        if value.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(name));
        }
        self.nodes.push(Node { value, op });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Registers an input (parameter or constant).
    pub fn leaf(&mut self, value: Matrix) -> Result<Var> {
        self.push(value, Op::Leaf, "leaf")
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.ncols() != vb.nrows() {
            return Err(Error::shape("matmul", format!("{} x {}", dims(va), dims(vb))));
        }
        let out = va * vb;
        self.push(out, Op::MatMul(a, b), "matmul")
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).transpose();
        self.push(out, Op::Transpose(a), "transpose")
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(op, format!("{} vs {}", dims(self.value(a)), dims(self.value(b)))));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let out = self.value(a) + self.value(b);
        self.push(out, Op::Add(a, b), "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let out = self.value(a) - self.value(b);
        self.push(out, Op::Sub(a, b), "sub")
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Result<Var> {
        let out = self.value(a) * s;
        self.push(out, Op::Scale(a, s), "scale")
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = self.value(a).component_mul(self.value(b));
        self.push(out, Op::Mul(a, b), "mul")
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(sigmoid);
        self.push(out, Op::Sigmoid(a), "sigmoid")
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(|x| x.max(0.0));
        self.push(out, Op::Relu(a), "relu")
    }

    /// Matrix inverse; d(X⁻¹) = −X⁻¹·dX·X⁻¹.
    pub fn inverse(&mut self, a: Var) -> Result<Var> {
        let out = invert(self.value(a))?;
        self.push(out, Op::Inverse(a), "inverse")
    }

    /// Row-wise min-max normalization `(q − min q)/(max q − min q)`.
    /// A constant row maps to `1/cols` everywhere and passes no gradient.
    /// The argmin/argmax positions are frozen for the backward pass.
    pub fn row_minmax(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let (rows, cols) = x.shape();
        if cols == 0 {
            return Err(Error::shape("row_minmax", "matrix has no columns"));
        }
        let mut out = Matrix::zeros(rows, cols);
        let mut extrema = Vec::with_capacity(rows);
        for i in 0..rows {
            let (mut lo, mut hi) = (0, 0);
            for j in 1..cols {
                if x[(i, j)] < x[(i, lo)] {
                    lo = j;
                }
                if x[(i, j)] > x[(i, hi)] {
                    hi = j;
                }
            }
            let range = x[(i, hi)] - x[(i, lo)];
            if range > 0.0 {
                for j in 0..cols {
                    out[(i, j)] = (x[(i, j)] - x[(i, lo)]) / range;
                }
                extrema.push(Some((lo, hi)));
            } else {
                for j in 0..cols {
                    out[(i, j)] = 1.0 / cols as f64;
                }
                extrema.push(None);
            }
        }
        self.push(out, Op::RowMinMax(a, extrema), "row_minmax")
    }

    /// Mean squared error over all entries.
    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mse", a, b)?;
        let d = self.value(a) - self.value(b);
        let n = d.len().max(1) as f64;
        let out = Matrix::from_element(1, 1, d.norm_squared() / n);
        self.push(out, Op::Mse(a, b), "mse")
    }

    /// Mean binary cross-entropy between `sigmoid(logits)` and `target`,
    /// with positive targets weighted by `pos_weight`.
    pub fn weighted_bce_with_logits(
        &mut self,
        logits: Var,
        target: Matrix,
        pos_weight: f64,
    ) -> Result<Var> {
        let x = self.value(logits);
        if x.shape() != target.shape() {
            return Err(Error::shape("weighted_bce", format!("{} vs {}", dims(x), dims(&target))));
        }
        let n = x.len().max(1) as f64;
        let total: f64 = x
            .iter()
            .zip(target.iter())
            .map(|(&x, &y)| pos_weight * y * softplus(-x) + (1.0 - y) * softplus(x))
            .sum();
        let out = Matrix::from_element(1, 1, total / n);
        self.push(out, Op::BceWithLogits { logits, target, pos_weight }, "weighted_bce")
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let out = Matrix::from_element(1, 1, self.value(a).sum());
        self.push(out, Op::Sum(a), "sum")
    }

    /// Reverse pass from a 1x1 `loss`. A tape supports a single backward pass.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if self.consumed {
            return Err(Error::BackwardTwice);
        }
        if self.shape(loss) != (1, 1) {
            return Err(Error::shape("backward", format!("loss is {}", dims(self.value(loss)))));
        }
        self.consumed = true;

        let mut grads: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Matrix::from_element(1, 1, 1.0));

        fn accumulate(grads: &mut [Option<Matrix>], v: Var, g: Matrix) {
            match &mut grads[v.0] {
                Some(existing) => *existing += g,
                slot @ None => *slot = Some(g),
            }
        }

        for idx in (0..=loss.0).rev() {
            let Some(upstream) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let ga = &upstream * self.value(*b).transpose();
                    let gb = self.value(*a).transpose() * &upstream;
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Transpose(a) => accumulate(&mut grads, *a, upstream.transpose()),
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, upstream.clone());
                    accumulate(&mut grads, *b, upstream.clone());
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *a, upstream.clone());
                    accumulate(&mut grads, *b, -&upstream);
                }
                Op::Scale(a, s) => accumulate(&mut grads, *a, &upstream * *s),
                Op::Mul(a, b) => {
                    let ga = upstream.component_mul(self.value(*b));
                    let gb = upstream.component_mul(self.value(*a));
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Sigmoid(a) => {
                    let s = &node.value;
                    let g = upstream.zip_map(s, |u, s| u * s * (1.0 - s));
                    accumulate(&mut grads, *a, g);
                }
                Op::Relu(a) => {
                    let g = upstream.zip_map(self.value(*a), |u, x| if x > 0.0 { u } else { 0.0 });
                    accumulate(&mut grads, *a, g);
                }
                Op::Inverse(a) => {
                    let inv_t = node.value.transpose();
                    let g = -(&inv_t * &upstream * &inv_t);
                    accumulate(&mut grads, *a, g);
                }
                Op::RowMinMax(a, extrema) => {
                    let x = self.value(*a);
                    let y = &node.value;
                    let mut g = Matrix::zeros(x.nrows(), x.ncols());
                    for (i, ext) in extrema.iter().enumerate() {
                        let Some((lo, hi)) = *ext else { continue };
                        let range = x[(i, hi)] - x[(i, lo)];
                        for j in 0..x.ncols() {
                            let u = upstream[(i, j)];
                            if u == 0.0 {
                                continue;
                            }
                            g[(i, j)] += u / range;
                            g[(i, lo)] += u * (y[(i, j)] - 1.0) / range;
                            g[(i, hi)] -= u * y[(i, j)] / range;
                        }
                    }
                    accumulate(&mut grads, *a, g);
                }
                Op::Mse(a, b) => {
                    let d = self.value(*a) - self.value(*b);
                    let scale = 2.0 * upstream[(0, 0)] / d.len().max(1) as f64;
                    let ga = d * scale;
                    accumulate(&mut grads, *b, -&ga);
                    accumulate(&mut grads, *a, ga);
                }
                Op::BceWithLogits { logits, target, pos_weight } => {
                    let x = self.value(*logits);
                    let scale = upstream[(0, 0)] / x.len().max(1) as f64;
                    let g = x.zip_map(target, |x, y| {
                        let s = sigmoid(x);
                        scale * (pos_weight * y * (s - 1.0) + (1.0 - y) * s)
                    });
                    accumulate(&mut grads, *logits, g);
                }
                Op::Sum(a) => {
                    let (r, c) = self.shape(*a);
                    accumulate(&mut grads, *a, Matrix::from_element(r, c, upstream[(0, 0)]));
                }
            }
            grads[idx] = Some(upstream);
        }

        let shapes = self.nodes.iter().map(|n| n.value.shape()).collect();
        Ok(Gradients { grads, shapes })
    }
}

/// `Cᵀ(CCᵀ + λI)⁻¹`, the damped right pseudo-inverse of a K×d matrix with
/// `d ≥ K`, composed from differentiable primitives.
pub fn regularized_pinv(tape: &mut Tape, c: Var, lambda: f64) -> Result<Var> {
    let (k, d) = tape.shape(c);
    if d < k {
        return Err(Error::Rank { embed_dim: d, k });
    }
    let ct = tape.transpose(c)?;
    let gram = tape.matmul(c, ct)?;
    let damped = if lambda != 0.0 {
        let ridge = tape.leaf(Matrix::identity(k, k) * lambda)?;
        tape.add(gram, ridge)?
    } else {
        gram
    };
    let inv = tape.inverse(damped)?;
    tape.matmul(ct, inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, vals: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, cols, vals)
    }

    #[test]
    fn sigmoid_of_zero() {
        let mut t = Tape::new();
        let z = t.leaf(Matrix::zeros(2, 3)).unwrap();
        let s = t.sigmoid(z).unwrap();
        assert!(t.value(s).iter().all(|&v| v == 0.5));
    }

    #[test]
    fn row_minmax_values() {
        let mut t = Tape::new();
        let a = t.leaf(m(2, 3, &[1.0, 3.0, 5.0, 2.0, 2.0, 2.0])).unwrap();
        let y = t.row_minmax(a).unwrap();
        let v = t.value(y);
        assert_eq!(v.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
        assert!(v.row(1).iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn shape_mismatch_is_contract_error() {
        let mut t = Tape::new();
        let a = t.leaf(Matrix::zeros(2, 3)).unwrap();
        let b = t.leaf(Matrix::zeros(2, 3)).unwrap();
        assert!(matches!(t.matmul(a, b), Err(Error::Shape { .. })));
        let c = t.leaf(Matrix::zeros(3, 2)).unwrap();
        assert!(matches!(t.add(a, c), Err(Error::Shape { .. })));
    }

    #[test]
    fn non_finite_leaf_rejected() {
        let mut t = Tape::new();
        assert!(matches!(
            t.leaf(Matrix::from_element(1, 1, f64::NAN)),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn singular_inverse() {
        let mut t = Tape::new();
        let a = t.leaf(m(2, 2, &[1.0, 2.0, 2.0, 4.0])).unwrap();
        assert!(matches!(t.inverse(a), Err(Error::Singular { .. })));
    }

    #[test]
    fn sum_of_product_gradient() {
        let mut t = Tape::new();
        let a = t.leaf(m(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])).unwrap();
        let b = t.leaf(m(3, 2, &[0.5, -1.0, 2.0, 0.0, 1.5, 3.0])).unwrap();
        let p = t.matmul(a, b).unwrap();
        let s = t.sum(p).unwrap();
        let g = t.backward(s).unwrap();
        let ones = Matrix::from_element(2, 2, 1.0);
        assert_eq!(g.get(a), &ones * t.value(b).transpose());
        assert_eq!(g.get(b), t.value(a).transpose() * &ones);
    }

    #[test]
    fn backward_contracts() {
        let mut t = Tape::new();
        let a = t.leaf(Matrix::from_element(2, 2, 1.0)).unwrap();
        assert!(matches!(t.backward(a), Err(Error::Shape { .. })));

        let mut t = Tape::new();
        let a = t.leaf(Matrix::from_element(2, 2, 1.0)).unwrap();
        let unused = t.leaf(Matrix::from_element(3, 1, 1.0)).unwrap();
        let s = t.sum(a).unwrap();
        let g = t.backward(s).unwrap();
        assert_eq!(g.get(unused), Matrix::zeros(3, 1));
        assert!(!g.is_reachable(unused));
        assert!(matches!(t.backward(s), Err(Error::BackwardTwice)));
    }

    #[test]
    fn pinv_of_identity_and_orthonormal_rows() {
        let mut t = Tape::new();
        let c = t.leaf(Matrix::identity(3, 3)).unwrap();
        let p = regularized_pinv(&mut t, c, 0.0).unwrap();
        assert_eq!(t.value(p), &Matrix::identity(3, 3));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rows = m(2, 4, &[s, s, 0.0, 0.0, 0.0, 0.0, s, -s]);
        let c = t.leaf(rows.clone()).unwrap();
        let p = regularized_pinv(&mut t, c, 0.0).unwrap();
        assert!((t.value(p) - rows.transpose()).amax() < 1e-12);
    }

    #[test]
    fn pinv_rank_error() {
        let mut t = Tape::new();
        let c = t.leaf(Matrix::from_element(4, 3, 1.0)).unwrap();
        assert!(matches!(
            regularized_pinv(&mut t, c, 1e-6),
            Err(Error::Rank { embed_dim: 3, k: 4 })
        ));
    }
}

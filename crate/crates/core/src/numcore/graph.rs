//! Reverse-mode differentiation over a recorded graph.
//!
//! Every operation appends a node holding its output value. Node indices
//! are assigned in creation order, so the node list is already a
//! topological order and the backward pass is a single reverse sweep.

use std::collections::BTreeMap;

use super::{Real, Tensor, TensorError};

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Leaf,
    MatMul,
    Add,
    MulElementwise,
    Sigmoid,
    Tanh,
    Relu,
    Softmax,
    Concat,
    Slice,
    Mse,
    Scale,
    Sum,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Softmax(Var),
    Concat { parts: Vec<Var>, axis: usize },
    Slice { input: Var, axis: usize, start: usize, len: usize },
    Mse(Var, Var),
    Scale(Var, f64),
    Sum(Var),
}

impl Op {
    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Leaf => vec![],
            Op::MatMul(a, b) | Op::Add(a, b) | Op::Mul(a, b) | Op::Mse(a, b) => vec![*a, *b],
            Op::Sigmoid(x) | Op::Tanh(x) | Op::Relu(x) | Op::Softmax(x) | Op::Scale(x, _) | Op::Sum(x) => {
                vec![*x]
            }
            Op::Concat { parts, .. } => parts.clone(),
            Op::Slice { input, .. } => vec![*input],
        }
    }
}

#[derive(Clone, Debug)]
pub struct GraphNode<T> {
    op: Op,
    output: Tensor<T>,
    grad: Option<Tensor<T>>,
    requires_grad: bool,
}

impl<T: Real> GraphNode<T> {
    pub fn op_kind(&self) -> OpKind {
        match self.op {
            Op::Leaf => OpKind::Leaf,
            Op::MatMul(..) => OpKind::MatMul,
            Op::Add(..) => OpKind::Add,
            Op::Mul(..) => OpKind::MulElementwise,
            Op::Sigmoid(_) => OpKind::Sigmoid,
            Op::Tanh(_) => OpKind::Tanh,
            Op::Relu(_) => OpKind::Relu,
            Op::Softmax(_) => OpKind::Softmax,
            Op::Concat { .. } => OpKind::Concat,
            Op::Slice { .. } => OpKind::Slice,
            Op::Mse(..) => OpKind::Mse,
            Op::Scale(..) => OpKind::Scale,
            Op::Sum(_) => OpKind::Sum,
        }
    }

    pub fn inputs(&self) -> Vec<Var> {
        self.op.inputs()
    }

    pub fn output(&self) -> &Tensor<T> {
        &self.output
    }

    pub fn grad(&self) -> Option<&Tensor<T>> {
        self.grad.as_ref()
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }
}

/// Gradients of a scalar loss with respect to every `requires_grad` leaf.
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    by_leaf: BTreeMap<Var, Tensor<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, var: Var) -> Option<&Tensor<T>> {
        self.by_leaf.get(&var)
    }

    pub fn take(&mut self, var: Var) -> Option<Tensor<T>> {
        self.by_leaf.remove(&var)
    }

    pub fn len(&self) -> usize {
        self.by_leaf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_leaf.is_empty()
    }
}

/// Single-threaded computation graph.
#[derive(Clone, Debug, Default)]
pub struct Graph<T> {
    nodes: Vec<GraphNode<T>>,
}

/// Output dims of a binary elementwise op on `(rows, cols)` views.
fn broadcast_dims(a: (usize, usize), b: (usize, usize)) -> Option<(usize, usize)> {
    let dim = |x: usize, y: usize| match (x, y) {
        _ if x == y => Some(x),
        (1, y) => Some(y),
        (x, 1) => Some(x),
        _ => None,
    };
    Some((dim(a.0, b.0)?, dim(a.1, b.1)?))
}

#[inline]
fn bidx(dims: (usize, usize), i: usize, j: usize) -> usize {
    let r = if dims.0 == 1 { 0 } else { i };
    let c = if dims.1 == 1 { 0 } else { j };
    r * dims.1 + c
}

/// Sums a full-size gradient down to a (possibly broadcast) operand shape.
fn reduce_to<T: Real>(grad: &[T], out: (usize, usize), target: &Tensor<T>) -> Tensor<T> {
    let dims = target.dims2();
    if dims == out {
        return Tensor::from_parts(target.shape().to_vec(), grad.to_vec());
    }
    let mut acc = vec![T::zero(); target.len()];
    for i in 0..out.0 {
        for j in 0..out.1 {
            acc[bidx(dims, i, j)] += grad[i * out.1 + j];
        }
    }
    Tensor::from_parts(target.shape().to_vec(), acc)
}

/// Splits a shape around `axis` into (outer, axis length, inner).
fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn add_into<T: Real>(slot: &mut Option<Tensor<T>>, delta: Tensor<T>) {
    match slot {
        Some(existing) => {
            for (a, b) in existing.values_mut().iter_mut().zip(delta.values()) {
                *a += *b;
            }
        }
        None => *slot = Some(delta),
    }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds a leaf; it is differentiated iff `tensor.requires_grad()`.
    pub fn leaf(&mut self, tensor: Tensor<T>) -> Var {
        let requires_grad = tensor.requires_grad();
        self.nodes.push(GraphNode { op: Op::Leaf, output: tensor, grad: None, requires_grad });
        Var(self.nodes.len() - 1)
    }

    pub fn param(&mut self, tensor: Tensor<T>) -> Var {
        self.leaf(tensor.with_grad(true))
    }

    pub fn constant(&mut self, tensor: Tensor<T>) -> Var {
        self.leaf(tensor.with_grad(false))
    }

    /// Nodes in creation order, which is a topological order.
    pub fn nodes(&self) -> &[GraphNode<T>] {
        &self.nodes
    }

    pub fn node(&self, var: Var) -> &GraphNode<T> {
        &self.nodes[var.0]
    }

    pub fn value(&self, var: Var) -> &Tensor<T> {
        &self.nodes[var.0].output
    }

    /// Gradient stored on any node by the last [`Graph::backward`] call.
    pub fn grad(&self, var: Var) -> Option<&Tensor<T>> {
        self.nodes[var.0].grad.as_ref()
    }

    fn push(&mut self, op: Op, output: Tensor<T>, name: &'static str) -> Result<Var, TensorError> {
        let output = output.check_finite(name)?;
        let requires_grad = op.inputs().iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(GraphNode { op, output, grad: None, requires_grad });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (at, bt) = (self.value(a), self.value(b));
        if at.shape().len() != 2 || bt.shape().len() != 2 || at.cols() != bt.rows() {
            return Err(TensorError::shape("matmul", at, bt));
        }
        let out = matmul_values(at, bt);
        self.push(Op::MatMul(a, b), out, "matmul")
    }

    fn elementwise(
        &mut self,
        a: Var,
        b: Var,
        name: &'static str,
        f: impl Fn(T, T) -> T,
    ) -> Result<Tensor<T>, TensorError> {
        let (at, bt) = (self.value(a), self.value(b));
        if at.same_shape(bt) {
            let values = at.values().iter().zip(bt.values()).map(|(&x, &y)| f(x, y)).collect();
            return Ok(Tensor::from_parts(at.shape().to_vec(), values));
        }
        if at.shape().len() > 2 || bt.shape().len() > 2 {
            return Err(TensorError::shape(name, at, bt));
        }
        let (da, db) = (at.dims2(), bt.dims2());
        let out = broadcast_dims(da, db).ok_or_else(|| TensorError::shape(name, at, bt))?;
        let mut values = Vec::with_capacity(out.0 * out.1);
        let (av, bv) = (at.values(), bt.values());
        for i in 0..out.0 {
            for j in 0..out.1 {
                values.push(f(av[bidx(da, i, j)], bv[bidx(db, i, j)]));
            }
        }
        Ok(Tensor::from_parts(vec![out.0, out.1], values))
    }

    /// Elementwise sum; a `[1, c]` or `[r, 1]` operand broadcasts.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = self.elementwise(a, b, "add", |x, y| x + y)?;
        self.push(Op::Add(a, b), out, "add")
    }

    /// Elementwise (Hadamard) product with the same broadcasting as [`Graph::add`].
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = self.elementwise(a, b, "mul", |x, y| x * y)?;
        self.push(Op::Mul(a, b), out, "mul")
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var, TensorError> {
        let out = self.value(x).map(sigmoid);
        self.push(Op::Sigmoid(x), out, "sigmoid")
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var, TensorError> {
        let out = self.value(x).map(|v| v.tanh());
        self.push(Op::Tanh(x), out, "tanh")
    }

    pub fn relu(&mut self, x: Var) -> Result<Var, TensorError> {
        let out = self.value(x).map(|v| v.max(T::zero()));
        self.push(Op::Relu(x), out, "relu")
    }

    /// Softmax along the last axis.
    pub fn softmax(&mut self, x: Var) -> Result<Var, TensorError> {
        let xt = self.value(x);
        let (rows, cols) = xt.dims2();
        let mut values = Vec::with_capacity(xt.len());
        for r in 0..rows {
            let row = &xt.values()[r * cols..(r + 1) * cols];
            let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
            let exps: Vec<T> = row.iter().map(|&v| (v - max).exp()).collect();
            let total: T = exps.iter().copied().sum();
            values.extend(exps.into_iter().map(|e| e / total));
        }
        let out = Tensor::from_parts(xt.shape().to_vec(), values);
        self.push(Op::Softmax(x), out, "softmax")
    }

    /// Joins tensors along `axis`; all other dimensions must agree.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var, TensorError> {
        let first = self.value(*parts.first().ok_or(TensorError::EmptyInput { op: "concat" })?);
        let rank = first.shape().len();
        if axis >= rank {
            return Err(TensorError::InvalidAxis { op: "concat", axis, rank });
        }
        let mut shape = first.shape().to_vec();
        shape[axis] = 0;
        for p in parts {
            let t = self.value(*p);
            let compatible = t.shape().len() == rank
                && t.shape().iter().enumerate().all(|(d, &n)| d == axis || n == first.shape()[d]);
            if !compatible {
                return Err(TensorError::shape("concat", first, t));
            }
            shape[axis] += t.shape()[axis];
        }
        let (outer, _, inner) = axis_split(&shape, axis);
        let mut values = Vec::with_capacity(shape.iter().product());
        for o in 0..outer {
            for p in parts {
                let t = self.value(*p);
                let chunk = t.shape()[axis] * inner;
                values.extend_from_slice(&t.values()[o * chunk..(o + 1) * chunk]);
            }
        }
        let out = Tensor::from_parts(shape, values);
        self.push(Op::Concat { parts: parts.to_vec(), axis }, out, "concat")
    }

    /// Takes `len` entries starting at `start` along `axis`.
    pub fn slice(&mut self, x: Var, axis: usize, start: usize, len: usize) -> Result<Var, TensorError> {
        let xt = self.value(x);
        let rank = xt.shape().len();
        if axis >= rank {
            return Err(TensorError::InvalidAxis { op: "slice", axis, rank });
        }
        let (outer, size, inner) = axis_split(xt.shape(), axis);
        if len == 0 || start + len > size {
            return Err(TensorError::SliceOutOfRange { start, len, size });
        }
        let mut shape = xt.shape().to_vec();
        shape[axis] = len;
        let mut values = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = o * size * inner + start * inner;
            values.extend_from_slice(&xt.values()[base..base + len * inner]);
        }
        let out = Tensor::from_parts(shape, values);
        self.push(Op::Slice { input: x, axis, start, len }, out, "slice")
    }

    /// Mean squared difference; operands must have equal shapes.
    pub fn mse(&mut self, prediction: Var, target: Var) -> Result<Var, TensorError> {
        let (pt, tt) = (self.value(prediction), self.value(target));
        if !pt.same_shape(tt) {
            return Err(TensorError::shape("mse", pt, tt));
        }
        let n = T::from_f64(pt.len() as f64);
        let total: T = pt.values().iter().zip(tt.values()).map(|(&p, &t)| (p - t) * (p - t)).sum();
        self.push(Op::Mse(prediction, target), Tensor::scalar(total / n), "mse")
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Result<Var, TensorError> {
        let f = T::from_f64(factor);
        let out = self.value(x).map(|v| v * f);
        self.push(Op::Scale(x, factor), out, "scale")
    }

    pub fn sum(&mut self, x: Var) -> Result<Var, TensorError> {
        let out = Tensor::scalar(self.value(x).sum());
        self.push(Op::Sum(x), out, "sum")
    }

    /// Back-propagates from a one-element `loss`.
    ///
    /// Every node's gradient is stored on the node; the returned map holds
    /// one entry per `requires_grad` leaf, zero-filled when the leaf does not
    /// reach `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients<T>, TensorError> {
        if self.value(loss).len() != 1 {
            return Err(TensorError::NotScalar { shape: self.value(loss).shape().to_vec() });
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.nodes[loss.0].grad = Some(Tensor::from_parts(self.value(loss).shape().to_vec(), vec![T::one()]));

        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].requires_grad {
                continue;
            }
            let Some(grad) = self.nodes[idx].grad.take() else {
                continue;
            };
            let contributions = self.input_grads(idx, &grad);
            self.nodes[idx].grad = Some(grad);
            for (var, delta) in contributions {
                if self.nodes[var.0].requires_grad {
                    add_into(&mut self.nodes[var.0].grad, delta);
                }
            }
        }

        let mut by_leaf = BTreeMap::new();
        for (idx, node) in self.nodes.iter().enumerate() {
            if matches!(node.op, Op::Leaf) && node.requires_grad {
                let g = node.grad.clone().unwrap_or_else(|| Tensor::zeros(node.output.shape()));
                by_leaf.insert(Var(idx), g);
            }
        }
        Ok(Gradients { by_leaf })
    }

    /// Vector-Jacobian products of node `idx` for each of its inputs.
    fn input_grads(&self, idx: usize, grad: &Tensor<T>) -> Vec<(Var, Tensor<T>)> {
        let node = &self.nodes[idx];
        let g = grad.values();
        let out = &node.output;
        let wants = |v: &Var| self.nodes[v.0].requires_grad;
        match &node.op {
            Op::Leaf => vec![],
            Op::MatMul(a, b) => {
                let (at, bt) = (self.value(*a), self.value(*b));
                let mut res = Vec::new();
                if wants(a) {
                    res.push((*a, matmul_values(grad, &bt.transpose())));
                }
                if wants(b) {
                    res.push((*b, matmul_values(&at.transpose(), grad)));
                }
                res
            }
            Op::Add(a, b) => {
                let dims = out.dims2();
                let mut res = Vec::new();
                for v in [a, b] {
                    if wants(v) {
                        res.push((*v, reduce_to(g, dims, self.value(*v))));
                    }
                }
                res
            }
            Op::Mul(a, b) => {
                let dims = out.dims2();
                let (at, bt) = (self.value(*a), self.value(*b));
                let mut res = Vec::new();
                for (v, other) in [(a, bt), (b, at)] {
                    if wants(v) {
                        let od = other.dims2();
                        let ov = other.values();
                        let mut full = Vec::with_capacity(g.len());
                        for i in 0..dims.0 {
                            for j in 0..dims.1 {
                                full.push(g[i * dims.1 + j] * ov[bidx(od, i, j)]);
                            }
                        }
                        res.push((*v, reduce_to(&full, dims, self.value(*v))));
                    }
                }
                res
            }
            Op::Sigmoid(x) => {
                let d = out.values().iter().zip(g).map(|(&y, &gy)| gy * y * (T::one() - y)).collect();
                vec![(*x, Tensor::from_parts(out.shape().to_vec(), d))]
            }
            Op::Tanh(x) => {
                let d = out.values().iter().zip(g).map(|(&y, &gy)| gy * (T::one() - y * y)).collect();
                vec![(*x, Tensor::from_parts(out.shape().to_vec(), d))]
            }
            Op::Relu(x) => {
                let xt = self.value(*x);
                let d = xt
                    .values()
                    .iter()
                    .zip(g)
                    .map(|(&v, &gy)| if v > T::zero() { gy } else { T::zero() })
                    .collect();
                vec![(*x, Tensor::from_parts(xt.shape().to_vec(), d))]
            }
            Op::Softmax(x) => {
                let (rows, cols) = out.dims2();
                let y = out.values();
                let mut d = Vec::with_capacity(y.len());
                for r in 0..rows {
                    let span = r * cols..(r + 1) * cols;
                    let dot: T = y[span.clone()].iter().zip(&g[span.clone()]).map(|(&a, &b)| a * b).sum();
                    d.extend(y[span.clone()].iter().zip(&g[span]).map(|(&yi, &gi)| yi * (gi - dot)));
                }
                vec![(*x, Tensor::from_parts(out.shape().to_vec(), d))]
            }
            Op::Concat { parts, axis } => {
                let (outer, _, inner) = axis_split(out.shape(), *axis);
                let total = out.shape()[*axis] * inner;
                let mut offset = 0;
                let mut res = Vec::new();
                for p in parts {
                    let pt = self.value(*p);
                    let chunk = pt.shape()[*axis] * inner;
                    if wants(p) {
                        let mut d = Vec::with_capacity(pt.len());
                        for o in 0..outer {
                            let base = o * total + offset;
                            d.extend_from_slice(&g[base..base + chunk]);
                        }
                        res.push((*p, Tensor::from_parts(pt.shape().to_vec(), d)));
                    }
                    offset += chunk;
                }
                res
            }
            Op::Slice { input, axis, start, len } => {
                let xt = self.value(*input);
                let (outer, size, inner) = axis_split(xt.shape(), *axis);
                let mut d = vec![T::zero(); xt.len()];
                for o in 0..outer {
                    let dst = o * size * inner + start * inner;
                    let src = o * len * inner;
                    d[dst..dst + len * inner].copy_from_slice(&g[src..src + len * inner]);
                }
                vec![(*input, Tensor::from_parts(xt.shape().to_vec(), d))]
            }
            Op::Mse(p, t) => {
                let (pt, tt) = (self.value(*p), self.value(*t));
                let k = g[0] * T::from_f64(2.0) / T::from_f64(pt.len() as f64);
                let diff: Vec<T> = pt.values().iter().zip(tt.values()).map(|(&a, &b)| (a - b) * k).collect();
                let mut res = Vec::new();
                if wants(t) {
                    res.push((*t, Tensor::from_parts(tt.shape().to_vec(), diff.iter().map(|&v| -v).collect())));
                }
                if wants(p) {
                    res.push((*p, Tensor::from_parts(pt.shape().to_vec(), diff)));
                }
                res
            }
            Op::Scale(x, factor) => {
                let f = T::from_f64(*factor);
                vec![(*x, grad.map(|v| v * f))]
            }
            Op::Sum(x) => {
                let xt = self.value(*x);
                vec![(*x, Tensor::full(xt.shape(), g[0]))]
            }
        }
    }
}

/// Plain `[m, k] x [k, n]` product of the matrix views.
pub(crate) fn matmul_values<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let (m, k) = a.dims2();
    let (_, n) = b.dims2();
    let (av, bv) = (a.values(), b.values());
    let mut out = vec![T::zero(); m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let x = av[i * k + p];
            if x == T::zero() {
                continue;
            }
            let brow = &bv[p * n..(p + 1) * n];
            for (o, &y) in row.iter_mut().zip(brow) {
                *o += x * y;
            }
        }
    }
    Tensor::from_parts(vec![m, n], out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: usize, cols: usize, v: &[f64]) -> Tensor<f64> {
        Tensor::matrix(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn sigmoid_of_zero_is_half() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::scalar(0.0f64));
        let y = g.sigmoid(x).unwrap();
        assert_eq!(g.value(y).values(), &[0.5]);
    }

    #[test]
    fn softmax_of_equal_scores_is_uniform() {
        let mut g = Graph::new();
        let x = g.constant(t(1, 3, &[0.0, 0.0, 0.0]));
        let y = g.softmax(x).unwrap();
        for &v in g.value(y).values() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn matmul_all_ones() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::full(&[2, 3], 1.0f64));
        let b = g.constant(Tensor::full(&[3, 1], 1.0f64));
        let c = g.matmul(a, b).unwrap();
        assert_eq!(g.value(c).shape(), &[2, 1]);
        assert_eq!(g.value(c).values(), &[3.0, 3.0]);
    }

    #[test]
    fn matmul_rejects_inner_mismatch() {
        let mut g = Graph::<f64>::new();
        let a = g.constant(Tensor::zeros(&[2, 3]));
        let b = g.constant(Tensor::zeros(&[2, 3]));
        assert!(matches!(g.matmul(a, b), Err(TensorError::ShapeMismatch { .. })));
    }

    #[test]
    fn square_gradient() {
        let mut g = Graph::new();
        let x = g.param(Tensor::scalar(3.0f64));
        let y = g.mul(x, x).unwrap();
        let grads = g.backward(y).unwrap();
        assert_eq!(grads.get(x).unwrap().values(), &[6.0]);
    }

    #[test]
    fn mse_at_minimum_has_zero_gradient() {
        let mut g = Graph::new();
        let p = g.param(t(2, 2, &[1.0, -2.0, 0.5, 4.0]));
        let q = g.constant(t(2, 2, &[1.0, -2.0, 0.5, 4.0]));
        let l = g.mse(p, q).unwrap();
        let grads = g.backward(l).unwrap();
        assert!(grads.get(p).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unreachable_leaf_gets_zero_gradient() {
        let mut g = Graph::new();
        let x = g.param(Tensor::scalar(2.0f64));
        let unused = g.param(t(1, 2, &[1.0, 1.0]));
        let y = g.scale(x, 4.0).unwrap();
        let grads = g.backward(y).unwrap();
        assert_eq!(grads.get(x).unwrap().values(), &[4.0]);
        assert_eq!(grads.get(unused).unwrap().values(), &[0.0, 0.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut g = Graph::new();
        let x = g.param(t(1, 2, &[1.0, 2.0]));
        let y = g.tanh(x).unwrap();
        assert!(matches!(g.backward(y), Err(TensorError::NotScalar { .. })));
    }

    #[test]
    fn non_finite_forward_is_an_error() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::scalar(f64::MAX));
        assert!(matches!(g.scale(x, 10.0), Err(TensorError::NonFinite { op: "scale" })));
    }

    #[test]
    fn broadcast_add_reduces_gradient() {
        let mut g = Graph::new();
        let m = g.param(t(3, 2, &[1.0; 6]));
        let b = g.param(t(1, 2, &[0.5, -0.5]));
        let c = g.param(t(3, 1, &[1.0, 2.0, 3.0]));
        let s = g.add(m, b).unwrap();
        let s = g.mul(s, c).unwrap();
        let l = g.sum(s).unwrap();
        let grads = g.backward(l).unwrap();
        assert_eq!(grads.get(b).unwrap().values(), &[6.0, 6.0]);
        assert_eq!(grads.get(c).unwrap().values(), &[2.0, 2.0, 2.0]);
        assert_eq!(grads.get(m).unwrap().values(), &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn concat_and_slice_are_inverse() {
        let mut g = Graph::new();
        let a = g.constant(t(2, 1, &[1.0, 2.0]));
        let b = g.constant(t(2, 2, &[3.0, 4.0, 5.0, 6.0]));
        let c = g.concat(&[a, b], 1).unwrap();
        assert_eq!(g.value(c).values(), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        let back = g.slice(c, 1, 1, 2).unwrap();
        assert_eq!(g.value(back), g.value(b));
        let rows = g.concat(&[b, b], 0).unwrap();
        assert_eq!(g.value(rows).shape(), &[4, 2]);
        assert!(g.slice(c, 1, 2, 2).is_err());
    }

    #[test]
    fn node_records_kind_and_inputs() {
        let mut g = Graph::<f64>::new();
        let a = g.constant(Tensor::scalar(1.0));
        let b = g.relu(a).unwrap();
        assert_eq!(g.node(b).op_kind(), OpKind::Relu);
        assert_eq!(g.node(b).inputs(), vec![a]);
        assert_eq!(g.node(a).op_kind(), OpKind::Leaf);
    }
}

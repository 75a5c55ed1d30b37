//! Define-by-run reverse-mode differentiation over dense matrices.
//!
//! A [`Tape`] records every operation in insertion order, so the node list is
//! always a valid topological order and [`Tape::backward`] is a single reverse
//! sweep. Leaves are either constants (never receive gradients) or parameters.

use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::linalg::kernels::{self, LOG_FLOOR};
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::scalar::Scalar;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Constant,
    Parameter,
    MatMul,
    Transpose,
    SparseMatMul,
    AddRowBias,
    Add,
    Sub,
    Scale,
    Relu,
    Sigmoid,
    RowSoftmax,
    ConcatCols,
    SumSquares,
    KlDivergence,
    StudentT,
}

enum Op<'g, T> {
    Constant,
    Parameter,
    MatMul(Var, Var),
    Transpose(Var),
    SparseMatMul(&'g CsrMatrix<T>, Var),
    AddRowBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, T),
    Relu(Var),
    Sigmoid(Var),
    RowSoftmax(Var),
    ConcatCols(Vec<Var>),
    SumSquares(Var),
    KlDivergence { target: DenseMatrix<T>, input: Var },
    StudentT { input: Var, centers: DenseMatrix<T>, kernel: DenseMatrix<T> },
}

impl<T> Op<'_, T> {
    fn kind(&self) -> OpKind {
        match self {
            Op::Constant => OpKind::Constant,
            Op::Parameter => OpKind::Parameter,
            Op::MatMul(..) => OpKind::MatMul,
            Op::Transpose(_) => OpKind::Transpose,
            Op::SparseMatMul(..) => OpKind::SparseMatMul,
            Op::AddRowBias(..) => OpKind::AddRowBias,
            Op::Add(..) => OpKind::Add,
            Op::Sub(..) => OpKind::Sub,
            Op::Scale(..) => OpKind::Scale,
            Op::Relu(_) => OpKind::Relu,
            Op::Sigmoid(_) => OpKind::Sigmoid,
            Op::RowSoftmax(_) => OpKind::RowSoftmax,
            Op::ConcatCols(_) => OpKind::ConcatCols,
            Op::SumSquares(_) => OpKind::SumSquares,
            Op::KlDivergence { .. } => OpKind::KlDivergence,
            Op::StudentT { .. } => OpKind::StudentT,
        }
    }

    fn parents(&self) -> Vec<Var> {
        match self {
            Op::Constant | Op::Parameter => Vec::new(),
            Op::MatMul(a, b) | Op::AddRowBias(a, b) | Op::Add(a, b) | Op::Sub(a, b) => {
                vec![*a, *b]
            }
            Op::Transpose(a)
            | Op::SparseMatMul(_, a)
            | Op::Scale(a, _)
            | Op::Relu(a)
            | Op::Sigmoid(a)
            | Op::RowSoftmax(a)
            | Op::SumSquares(a)
            | Op::KlDivergence { input: a, .. }
            | Op::StudentT { input: a, .. } => vec![*a],
            Op::ConcatCols(parts) => parts.clone(),
        }
    }
}

struct Node<'g, T: Clone> {
    value: Cow<'g, DenseMatrix<T>>,
    op: Op<'g, T>,
    /// True when some parameter is an ancestor (or the node is one).
    tracked: bool,
}

/// Recording of a single forward evaluation.
///
/// The lifetime lets leaves and sparse operands (graph filters) borrow their
/// data instead of copying it.
pub struct Tape<'g, T: Clone> {
    nodes: Vec<Node<'g, T>>,
    grads: Vec<Option<DenseMatrix<T>>>,
}

impl<T: Scalar> Default for Tape<'_, T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'g, T: Scalar> Tape<'g, T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            grads: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records a leaf that never receives a gradient.
    pub fn constant(&mut self, value: DenseMatrix<T>) -> Var {
        self.push(value, Op::Constant, false)
    }

    /// Records a trainable leaf.
    pub fn parameter(&mut self, value: DenseMatrix<T>) -> Var {
        self.push(value, Op::Parameter, true)
    }

    /// Constant leaf borrowing its value.
    pub fn constant_ref(&mut self, value: &'g DenseMatrix<T>) -> Var {
        self.push_node(Cow::Borrowed(value), Op::Constant, false)
    }

    /// Trainable leaf borrowing its value.
    pub fn parameter_ref(&mut self, value: &'g DenseMatrix<T>) -> Var {
        self.push_node(Cow::Borrowed(value), Op::Parameter, true)
    }

    pub fn value(&self, v: Var) -> &DenseMatrix<T> {
        &self.nodes[v.0].value
    }

    /// Scalar value of a `1×1` node.
    pub fn scalar(&self, v: Var) -> T {
        self.nodes[v.0].value.as_slice()[0]
    }

    pub fn op_kind(&self, v: Var) -> OpKind {
        self.nodes[v.0].op.kind()
    }

    pub fn parents(&self, v: Var) -> Vec<Var> {
        self.nodes[v.0].op.parents()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> {
        (0..self.nodes.len()).map(Var)
    }

    /// Moves the gradient out of the tape (zeros if the node was not reached).
    pub fn take_grad(&mut self, v: Var) -> DenseMatrix<T> {
        match self.grads.get_mut(v.0).and_then(Option::take) {
            Some(g) => g,
            None => {
                let (r, c) = self.nodes[v.0].value.shape();
                DenseMatrix::zeros(r, c)
            }
        }
    }

    /// Gradient accumulated by the last [`Tape::backward`]; zeros when the
    /// node was not reached.
    pub fn grad(&self, v: Var) -> DenseMatrix<T> {
        match self.grads.get(v.0).and_then(Option::as_ref) {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.nodes[v.0].value.shape();
                DenseMatrix::zeros(r, c)
            }
        }
    }

    fn push(&mut self, value: DenseMatrix<T>, op: Op<'g, T>, tracked: bool) -> Var {
        self.push_node(Cow::Owned(value), op, tracked)
    }

    fn push_node(&mut self, value: Cow<'g, DenseMatrix<T>>, op: Op<'g, T>, tracked: bool) -> Var {
        self.nodes.push(Node { value, op, tracked });
        Var(self.nodes.len() - 1)
    }

    fn check(&self, v: Var) -> Result<&Node<'g, T>> {
        self.nodes
            .get(v.0)
            .ok_or_else(|| Error::Contract(format!("variable {} is not on this tape", v.0)))
    }

    fn tracked(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].tracked)
    }

    fn unary(&mut self, a: Var, value: DenseMatrix<T>, op: Op<'g, T>) -> Var {
        let tracked = self.tracked(&[a]);
        self.push(value, op, tracked)
    }

    fn binary(&mut self, a: Var, b: Var, value: DenseMatrix<T>, op: Op<'g, T>) -> Var {
        let tracked = self.tracked(&[a, b]);
        self.push(value, op, tracked)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.check(a)?.value.matmul(&self.check(b)?.value)?;
        Ok(self.binary(a, b, value, Op::MatMul(a, b)))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let value = self.check(a)?.value.transpose();
        Ok(self.unary(a, value, Op::Transpose(a)))
    }

    /// `sparse · a` with a constant sparse left operand.
    pub fn sparse_matmul(&mut self, sparse: &'g CsrMatrix<T>, a: Var) -> Result<Var> {
        let value = sparse.mul_dense(&self.check(a)?.value)?;
        Ok(self.unary(a, value, Op::SparseMatMul(sparse, a)))
    }

    pub fn add_row_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let value = self.check(a)?.value.add_row_bias(&self.check(bias)?.value)?;
        Ok(self.binary(a, bias, value, Op::AddRowBias(a, bias)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.check(a)?.value.add(&self.check(b)?.value)?;
        Ok(self.binary(a, b, value, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.check(a)?.value.sub(&self.check(b)?.value)?;
        Ok(self.binary(a, b, value, Op::Sub(a, b)))
    }

    pub fn scale(&mut self, a: Var, s: T) -> Result<Var> {
        let value = self.check(a)?.value.scale(s);
        Ok(self.unary(a, value, Op::Scale(a, s)))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let value = self.check(a)?.value.relu();
        Ok(self.unary(a, value, Op::Relu(a)))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let value = self.check(a)?.value.sigmoid();
        Ok(self.unary(a, value, Op::Sigmoid(a)))
    }

    pub fn row_softmax(&mut self, a: Var) -> Result<Var> {
        let value = self.check(a)?.value.row_softmax();
        Ok(self.unary(a, value, Op::RowSoftmax(a)))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let blocks = parts
            .iter()
            .map(|&p| self.check(p).map(|n| n.value.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let value = DenseMatrix::concat_cols(&blocks)?;
        let tracked = self.tracked(parts);
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), tracked))
    }

    /// Squared Frobenius norm as a `1×1` node.
    pub fn sum_squares(&mut self, a: Var) -> Result<Var> {
        let value = DenseMatrix::scalar(self.check(a)?.value.sum_squares());
        Ok(self.unary(a, value, Op::SumSquares(a)))
    }

    /// `KL(target ‖ input)` with a constant target; `1×1` result.
    pub fn kl_divergence(&mut self, target: DenseMatrix<T>, input: Var) -> Result<Var> {
        let q = &self.check(input)?.value;
        if q.shape() != target.shape() {
            return Err(Error::dim("kl_divergence", target.shape(), q.shape()));
        }
        let value = DenseMatrix::scalar(kernels::kl(&target, q));
        Ok(self.unary(input, value, Op::KlDivergence { target, input }))
    }

    /// Student-t soft assignment of the rows of `input` to constant `centers`.
    pub fn student_t(&mut self, input: Var, centers: DenseMatrix<T>) -> Result<Var> {
        let h = &self.check(input)?.value;
        if h.cols() != centers.cols() {
            return Err(Error::dim("student_t", h.shape(), centers.shape()));
        }
        let (value, kernel) = kernels::student_t(h, &centers);
        Ok(self.unary(
            input,
            value,
            Op::StudentT {
                input,
                centers,
                kernel,
            },
        ))
    }

    /// Reverse sweep from a `1×1` loss node.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let shape = self.check(loss)?.value.shape();
        if shape != (1, 1) {
            return Err(Error::Contract(format!(
                "backward needs a 1x1 loss, got {}x{}",
                shape.0, shape.1
            )));
        }
        let mut grads: Vec<Option<DenseMatrix<T>>> = Vec::with_capacity(self.nodes.len());
        grads.resize_with(self.nodes.len(), || None);
        grads[loss.0] = Some(DenseMatrix::scalar(T::one()));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.tracked {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            for (parent, pg) in self.vjp(node, &g)? {
                if !self.nodes[parent.0].tracked {
                    continue;
                }
                match &mut grads[parent.0] {
                    Some(acc) => acc.axpy(T::one(), &pg)?,
                    slot @ None => *slot = Some(pg),
                }
            }
            grads[idx] = Some(g);
        }
        self.grads = grads;
        Ok(())
    }

    /// Vector-Jacobian products of one node with respect to its parents.
    fn vjp(&self, node: &Node<'g, T>, g: &DenseMatrix<T>) -> Result<Vec<(Var, DenseMatrix<T>)>> {
        let val = |v: Var| -> &DenseMatrix<T> { &self.nodes[v.0].value };
        let wants = |v: Var| self.nodes[v.0].tracked;
        let out = match &node.op {
            Op::Constant | Op::Parameter => Vec::new(),
            Op::MatMul(a, b) => {
                let mut out = Vec::with_capacity(2);
                if wants(*a) {
                    out.push((*a, g.matmul_nt(val(*b))?));
                }
                if wants(*b) {
                    out.push((*b, val(*a).matmul_tn(g)?));
                }
                out
            }
            Op::Transpose(a) => vec![(*a, g.transpose())],
            Op::SparseMatMul(s, a) => vec![(*a, s.transpose_mul_dense(g)?)],
            Op::AddRowBias(a, b) => vec![(*a, g.clone()), (*b, g.column_sums())],
            Op::Add(a, b) => vec![(*a, g.clone()), (*b, g.clone())],
            Op::Sub(a, b) => vec![(*a, g.clone()), (*b, g.scale(-T::one()))],
            Op::Scale(a, s) => vec![(*a, g.scale(*s))],
            Op::Relu(a) => {
                let x = val(*a);
                let mut d = g.clone();
                for (d, &x) in d.as_mut_slice().iter_mut().zip(x.as_slice()) {
                    if x <= T::zero() {
                        *d = T::zero();
                    }
                }
                vec![(*a, d)]
            }
            Op::Sigmoid(a) => {
                let y: &DenseMatrix<T> = &node.value;
                let mut d = g.clone();
                for (d, &y) in d.as_mut_slice().iter_mut().zip(y.as_slice()) {
                    *d *= y * (T::one() - y);
                }
                vec![(*a, d)]
            }
            Op::RowSoftmax(a) => {
                let y: &DenseMatrix<T> = &node.value;
                let mut d = g.clone();
                for i in 0..y.rows() {
                    let dot: T = g.row(i).iter().zip(y.row(i)).map(|(&g, &y)| g * y).sum();
                    for (d, &y) in d.row_mut(i).iter_mut().zip(y.row(i)) {
                        *d = y * (*d - dot);
                    }
                }
                vec![(*a, d)]
            }
            Op::ConcatCols(parts) => {
                let mut start = 0;
                let mut out = Vec::with_capacity(parts.len());
                for &p in parts {
                    let width = val(p).cols();
                    if wants(p) {
                        out.push((p, g.column_block(start, width)?));
                    }
                    start += width;
                }
                out
            }
            Op::SumSquares(a) => {
                let s = g.as_slice()[0] * T::of(2.0);
                vec![(*a, val(*a).scale(s))]
            }
            Op::KlDivergence { target, input } => {
                let s = g.as_slice()[0];
                let floor = T::of(LOG_FLOOR);
                let q = val(*input);
                let mut d = DenseMatrix::zeros(q.rows(), q.cols());
                for ((d, &p), &q) in d
                    .as_mut_slice()
                    .iter_mut()
                    .zip(target.as_slice())
                    .zip(q.as_slice())
                {
                    if p > T::zero() && q > floor {
                        *d = -s * p / q;
                    }
                }
                vec![(*input, d)]
            }
            Op::StudentT {
                input,
                centers,
                kernel,
            } => {
                let h = val(*input);
                let t: &DenseMatrix<T> = &node.value;
                let mut d = DenseMatrix::zeros(h.rows(), h.cols());
                let two = T::of(2.0);
                for i in 0..h.rows() {
                    let total: T = kernel.row(i).iter().copied().sum();
                    let dot: T = g.row(i).iter().zip(t.row(i)).map(|(&g, &t)| g * t).sum();
                    for k in 0..centers.rows() {
                        let q = kernel[(i, k)];
                        // dL/dq, then dq/d‖h-β‖² = -q², then d‖h-β‖²/dh = 2(h-β)
                        let coeff = -(g[(i, k)] - dot) / total * q * q * two;
                        for ((dv, &hv), &bv) in
                            d.row_mut(i).iter_mut().zip(h.row(i)).zip(centers.row(k))
                        {
                            *dv += coeff * (hv - bv);
                        }
                    }
                }
                vec![(*input, d)]
            }
        };
        Ok(out)
    }
}

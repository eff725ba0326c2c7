use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::ops::{Add, Div, Mul, Neg, Sub};

use super::tensor::{reduce_to, zip_broadcast, Tensor};
use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Constant,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    AddConst(usize),
    MulConst(usize, f64),
    Sin(usize),
    Cos(usize),
    Exp(usize),
    Ln(usize),
    LogEps(usize, f64),
    Softplus(usize),
    Sigmoid(usize),
    Relu(usize),
    Sqrt(usize),
    Square(usize),
    Atan2(usize, usize),
    MatMul(usize, usize),
    Sum(usize),
    SumRows(usize),
    SumCols(usize),
    GroupSumRows(usize, usize),
    RepeatRows(usize, usize),
    CumsumExcl(usize),
    Norm(usize),
    Reshape(usize),
    Transpose(usize),
    ConcatCols(Vec<usize>),
    ConcatRows(Vec<usize>),
    SliceCols(usize, usize),
    SliceRows(usize, usize),
    Assemble(Vec<usize>),
    Index(usize, usize),
}

struct Node {
    op: Op,
    value: Tensor,
    needs_grad: bool,
}

/// Append-only record of tensor operations.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl core::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let nodes = self.tape.nodes.borrow();
        let v = &nodes[self.id].value;
        write!(f, "Var#{}({}x{})", self.id, v.rows(), v.cols())
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, op: Op, value: Tensor, needs_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len();
        nodes.push(Node { op, value, needs_grad });
        Var { tape: self, id }
    }

    fn needs(&self, ids: &[usize]) -> bool {
        let nodes = self.nodes.borrow();
        ids.iter().any(|&i| nodes[i].needs_grad)
    }

    /// A differentiable input.
    pub fn leaf(&self, value: Tensor) -> Var<'_> {
        self.push(Op::Leaf, value, true)
    }

    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push(Op::Constant, value, false)
    }

    pub fn scalar(&self, value: f64) -> Var<'_> {
        self.constant(Tensor::scalar(value))
    }

    pub fn concat_cols<'t>(&'t self, parts: &[Var<'t>]) -> Var<'t> {
        assert!(!parts.is_empty());
        let ids: Vec<usize> = parts.iter().map(|v| v.id).collect();
        let value = {
            let nodes = self.nodes.borrow();
            let rows = nodes[ids[0]].value.rows();
            let cols: usize = ids.iter().map(|&i| nodes[i].value.cols()).sum();
            let mut data = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                for &i in &ids {
                    let t = &nodes[i].value;
                    assert_eq!(t.rows(), rows, "concat_cols row mismatch");
                    data.extend_from_slice(&t.data()[r * t.cols()..(r + 1) * t.cols()]);
                }
            }
            Tensor::new(rows, cols, data)
        };
        let needs = self.needs(&ids);
        self.push(Op::ConcatCols(ids), value, needs)
    }

    pub fn concat_rows<'t>(&'t self, parts: &[Var<'t>]) -> Var<'t> {
        assert!(!parts.is_empty());
        let ids: Vec<usize> = parts.iter().map(|v| v.id).collect();
        let value = {
            let nodes = self.nodes.borrow();
            let cols = nodes[ids[0]].value.cols();
            let rows: usize = ids.iter().map(|&i| nodes[i].value.rows()).sum();
            let mut data = Vec::with_capacity(rows * cols);
            for &i in &ids {
                assert_eq!(nodes[i].value.cols(), cols, "concat_rows column mismatch");
                data.extend_from_slice(nodes[i].value.data());
            }
            Tensor::new(rows, cols, data)
        };
        let needs = self.needs(&ids);
        self.push(Op::ConcatRows(ids), value, needs)
    }

    /// Packs scalar vars row-major into a `rows x cols` tensor.
    pub fn assemble<'t>(&'t self, parts: &[Var<'t>], rows: usize, cols: usize) -> Var<'t> {
        assert_eq!(parts.len(), rows * cols);
        let ids: Vec<usize> = parts.iter().map(|v| v.id).collect();
        let value = {
            let nodes = self.nodes.borrow();
            Tensor::new(rows, cols, ids.iter().map(|&i| nodes[i].value.item()).collect())
        };
        let needs = self.needs(&ids);
        self.push(Op::Assemble(ids), value, needs)
    }

    /// Reverse sweep from a scalar `output`.
    pub fn backward(&self, output: Var<'_>) -> Result<Gradients> {
        let nodes = self.nodes.borrow();
        let out = &nodes[output.id];
        if !out.value.is_scalar() {
            return Err(Error::NonScalarOutput { rows: out.value.rows(), cols: out.value.cols() });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; nodes.len()];
        grads[output.id] = Some(Tensor::scalar(1.0));
        for id in (0..=output.id).rev() {
            let node = &nodes[id];
            if !node.needs_grad {
                continue;
            }
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            propagate(&nodes, node, g, &mut grads);
        }
        let shapes = nodes.iter().map(|n| n.value.shape()).collect();
        Ok(Gradients { grads, shapes })
    }
}

fn accumulate(nodes: &[Node], grads: &mut [Option<Tensor>], id: usize, g: Tensor) {
    if !nodes[id].needs_grad {
        return;
    }
    match &mut grads[id] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

fn propagate(nodes: &[Node], node: &Node, g: Tensor, grads: &mut [Option<Tensor>]) {
    let val = |i: usize| &nodes[i].value;
    let wants = |i: usize| nodes[i].needs_grad;
    match node.op {
        Op::Leaf | Op::Constant => {}
        Op::Add(a, b) => {
            if wants(b) {
                accumulate(nodes, grads, b, reduce_to(g.clone(), val(b).shape()));
            }
            accumulate(nodes, grads, a, reduce_to(g, val(a).shape()));
        }
        Op::Sub(a, b) => {
            if wants(b) {
                accumulate(nodes, grads, b, reduce_to(g.map(|x| -x), val(b).shape()));
            }
            accumulate(nodes, grads, a, reduce_to(g, val(a).shape()));
        }
        Op::Mul(a, b) => {
            if wants(a) {
                let ga = zip_broadcast(&g, val(b), |g, b| g * b);
                accumulate(nodes, grads, a, reduce_to(ga, val(a).shape()));
            }
            if wants(b) {
                let gb = zip_broadcast(&g, val(a), |g, a| g * a);
                accumulate(nodes, grads, b, reduce_to(gb, val(b).shape()));
            }
        }
        Op::Div(a, b) => {
            if wants(a) {
                let ga = zip_broadcast(&g, val(b), |g, b| g / b);
                accumulate(nodes, grads, a, reduce_to(ga, val(a).shape()));
            }
            if wants(b) {
                let gy = zip_broadcast(&g, &node.value, |g, y| g * y);
                let gb = zip_broadcast(&gy, val(b), |gy, b| -gy / b);
                accumulate(nodes, grads, b, reduce_to(gb, val(b).shape()));
            }
        }
        Op::Neg(a) => accumulate(nodes, grads, a, g.map(|x| -x)),
        Op::AddConst(a) => accumulate(nodes, grads, a, g),
        Op::MulConst(a, c) => accumulate(nodes, grads, a, g.map(|x| x * c)),
        Op::Sin(a) => accumulate(nodes, grads, a, zip_broadcast(&g, val(a), |g, x| g * math::cos(x))),
        Op::Cos(a) => accumulate(nodes, grads, a, zip_broadcast(&g, val(a), |g, x| -g * math::sin(x))),
        Op::Exp(a) => accumulate(nodes, grads, a, zip_broadcast(&g, &node.value, |g, y| g * y)),
        Op::Ln(a) => accumulate(nodes, grads, a, zip_broadcast(&g, val(a), |g, x| g / x)),
        Op::LogEps(a, eps) => {
            accumulate(nodes, grads, a, zip_broadcast(&g, val(a), |g, x| g / (x + eps)))
        }
        Op::Softplus(a) => {
            accumulate(nodes, grads, a, zip_broadcast(&g, val(a), |g, x| g * math::sigmoid(x)))
        }
        Op::Sigmoid(a) => {
            accumulate(nodes, grads, a, zip_broadcast(&g, &node.value, |g, y| g * y * (1.0 - y)))
        }
        Op::Relu(a) => accumulate(
            nodes,
            grads,
            a,
            zip_broadcast(&g, val(a), |g, x| if x > 0.0 { g } else { 0.0 }),
        ),
        Op::Sqrt(a) => accumulate(
            nodes,
            grads,
            a,
            zip_broadcast(&g, &node.value, |g, y| if y > 0.0 { 0.5 * g / y } else { 0.0 }),
        ),
        Op::Square(a) => accumulate(nodes, grads, a, zip_broadcast(&g, val(a), |g, x| 2.0 * g * x)),
        Op::Atan2(y, x) => {
            let (yv, xv) = (val(y), val(x));
            let r2 = zip_broadcast(yv, xv, |y, x| x * x + y * y);
            if wants(y) {
                let gy = zip_broadcast(&zip_broadcast(&g, xv, |g, x| g * x), &r2, |n, d| n / d);
                accumulate(nodes, grads, y, gy);
            }
            if wants(x) {
                let gx = zip_broadcast(&zip_broadcast(&g, yv, |g, y| -g * y), &r2, |n, d| n / d);
                accumulate(nodes, grads, x, gx);
            }
        }
        Op::MatMul(a, b) => {
            if wants(a) {
                accumulate(nodes, grads, a, Tensor::matmul(&g, false, val(b), true));
            }
            if wants(b) {
                accumulate(nodes, grads, b, Tensor::matmul(val(a), true, &g, false));
            }
        }
        Op::Sum(a) => {
            let (r, c) = val(a).shape();
            accumulate(nodes, grads, a, Tensor::filled(r, c, g.item()));
        }
        Op::SumRows(a) => {
            let (r, c) = val(a).shape();
            let mut out = Vec::with_capacity(r * c);
            for row in 0..r {
                out.extend(core::iter::repeat_n(g.data()[row], c));
            }
            accumulate(nodes, grads, a, Tensor::new(r, c, out));
        }
        Op::SumCols(a) => {
            let (r, c) = val(a).shape();
            let mut out = Vec::with_capacity(r * c);
            for _ in 0..r {
                out.extend_from_slice(g.data());
            }
            accumulate(nodes, grads, a, Tensor::new(r, c, out));
        }
        Op::GroupSumRows(a, group) => {
            let (r, c) = val(a).shape();
            let mut out = Vec::with_capacity(r * c);
            for row in 0..r {
                let src = row / group;
                out.extend_from_slice(&g.data()[src * c..(src + 1) * c]);
            }
            accumulate(nodes, grads, a, Tensor::new(r, c, out));
        }
        Op::RepeatRows(a, times) => {
            let (r, c) = val(a).shape();
            let mut out = vec![0.0; r * c];
            for row in 0..r * times {
                let dst = row / times;
                for col in 0..c {
                    out[dst * c + col] += g.data()[row * c + col];
                }
            }
            accumulate(nodes, grads, a, Tensor::new(r, c, out));
        }
        Op::CumsumExcl(a) => {
            let (r, c) = val(a).shape();
            let mut out = vec![0.0; r * c];
            for row in 0..r {
                let mut acc = 0.0;
                for col in (0..c).rev() {
                    out[row * c + col] = acc;
                    acc += g.data()[row * c + col];
                }
            }
            accumulate(nodes, grads, a, Tensor::new(r, c, out));
        }
        Op::Norm(a) => {
            let n = node.value.item();
            let gs = g.item();
            let ga = if n > 0.0 { val(a).map(|x| gs * x / n) } else { val(a).map(|_| 0.0) };
            accumulate(nodes, grads, a, ga);
        }
        Op::Reshape(a) => {
            let (r, c) = val(a).shape();
            accumulate(nodes, grads, a, g.reshaped(r, c));
        }
        Op::Transpose(a) => accumulate(nodes, grads, a, g.transposed()),
        Op::ConcatCols(ref ids) => {
            let rows = g.rows();
            let mut offset = 0;
            for &i in ids {
                let c = val(i).cols();
                if wants(i) {
                    let mut part = Vec::with_capacity(rows * c);
                    for r in 0..rows {
                        let start = r * g.cols() + offset;
                        part.extend_from_slice(&g.data()[start..start + c]);
                    }
                    accumulate(nodes, grads, i, Tensor::new(rows, c, part));
                }
                offset += c;
            }
        }
        Op::ConcatRows(ref ids) => {
            let cols = g.cols();
            let mut offset = 0;
            for &i in ids {
                let r = val(i).rows();
                if wants(i) {
                    let part = g.data()[offset * cols..(offset + r) * cols].to_vec();
                    accumulate(nodes, grads, i, Tensor::new(r, cols, part));
                }
                offset += r;
            }
        }
        Op::SliceCols(a, start) => {
            let (r, c) = val(a).shape();
            let len = g.cols();
            let mut out = vec![0.0; r * c];
            for row in 0..r {
                out[row * c + start..row * c + start + len]
                    .copy_from_slice(&g.data()[row * len..(row + 1) * len]);
            }
            accumulate(nodes, grads, a, Tensor::new(r, c, out));
        }
        Op::SliceRows(a, start) => {
            let (r, c) = val(a).shape();
            let mut out = vec![0.0; r * c];
            out[start * c..start * c + g.len()].copy_from_slice(g.data());
            accumulate(nodes, grads, a, Tensor::new(r, c, out));
        }
        Op::Assemble(ref ids) => {
            for (k, &i) in ids.iter().enumerate() {
                accumulate(nodes, grads, i, Tensor::scalar(g.data()[k]));
            }
        }
        Op::Index(a, i) => {
            let (r, c) = val(a).shape();
            let mut out = Tensor::zeros(r, c);
            out.data_mut()[i] = g.item();
            accumulate(nodes, grads, a, out);
        }
    }
}

/// Gradients of one backward sweep, retained for leaf nodes only.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// Gradient with respect to `var`; zeros when `var` does not influence
    /// the output.
    pub fn wrt(&self, var: Var<'_>) -> Tensor {
        match &self.grads[var.id] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shapes[var.id];
                Tensor::zeros(r, c)
            }
        }
    }
}

impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn value(&self) -> Tensor {
        self.tape.nodes.borrow()[self.id].value.clone()
    }

    pub fn with_value<R>(&self, f: impl FnOnce(&Tensor) -> R) -> R {
        f(&self.tape.nodes.borrow()[self.id].value)
    }

    /// Value of a scalar var.
    pub fn item(&self) -> f64 {
        self.with_value(|t| t.item())
    }

    pub fn shape(&self) -> (usize, usize) {
        self.with_value(|t| t.shape())
    }

    fn unary(self, op: Op, f: impl Fn(&Tensor) -> Tensor) -> Var<'t> {
        let value = self.with_value(f);
        let needs = self.tape.needs(&[self.id]);
        self.tape.push(op, value, needs)
    }

    fn binary(self, other: Var<'t>, op: Op, f: impl Fn(f64, f64) -> f64) -> Var<'t> {
        debug_assert!(core::ptr::eq(self.tape, other.tape), "vars from different tapes");
        let value = {
            let nodes = self.tape.nodes.borrow();
            zip_broadcast(&nodes[self.id].value, &nodes[other.id].value, f)
        };
        let needs = self.tape.needs(&[self.id, other.id]);
        self.tape.push(op, value, needs)
    }

    pub fn sin(self) -> Var<'t> {
        self.unary(Op::Sin(self.id), |t| t.map(math::sin))
    }

    pub fn cos(self) -> Var<'t> {
        self.unary(Op::Cos(self.id), |t| t.map(math::cos))
    }

    pub fn exp(self) -> Var<'t> {
        self.unary(Op::Exp(self.id), |t| t.map(math::exp))
    }

    pub fn ln(self) -> Var<'t> {
        self.unary(Op::Ln(self.id), |t| t.map(math::ln))
    }

    /// `ln(x + eps)` as a single primitive.
    pub fn log_eps(self, eps: f64) -> Var<'t> {
        self.unary(Op::LogEps(self.id, eps), |t| t.map(|x| math::ln(x + eps)))
    }

    pub fn softplus(self) -> Var<'t> {
        self.unary(Op::Softplus(self.id), |t| t.map(math::softplus))
    }

    pub fn sigmoid(self) -> Var<'t> {
        self.unary(Op::Sigmoid(self.id), |t| t.map(math::sigmoid))
    }

    pub fn relu(self) -> Var<'t> {
        self.unary(Op::Relu(self.id), |t| t.map(|x| if x > 0.0 { x } else { 0.0 }))
    }

    pub fn sqrt(self) -> Var<'t> {
        self.unary(Op::Sqrt(self.id), |t| t.map(math::sqrt))
    }

    pub fn square(self) -> Var<'t> {
        self.unary(Op::Square(self.id), |t| t.map(|x| x * x))
    }

    /// Elementwise `atan2(self, x)`.
    pub fn atan2(self, x: Var<'t>) -> Var<'t> {
        assert_eq!(self.shape(), x.shape(), "atan2 operands must match");
        self.binary(x, Op::Atan2(self.id, x.id), math::atan2)
    }

    pub fn matmul(self, rhs: Var<'t>) -> Var<'t> {
        let value = {
            let nodes = self.tape.nodes.borrow();
            Tensor::matmul(&nodes[self.id].value, false, &nodes[rhs.id].value, false)
        };
        let needs = self.tape.needs(&[self.id, rhs.id]);
        self.tape.push(Op::MatMul(self.id, rhs.id), value, needs)
    }

    /// Sum of all entries (pairwise order).
    pub fn sum(self) -> Var<'t> {
        self.unary(Op::Sum(self.id), |t| Tensor::scalar(t.sum()))
    }

    pub fn mean(self) -> Var<'t> {
        let n = self.with_value(|t| t.len()) as f64;
        self.sum() * (1.0 / n)
    }

    /// `[R x C] -> [R x 1]`.
    pub fn sum_rows(self) -> Var<'t> {
        self.unary(Op::SumRows(self.id), |t| {
            let c = t.cols();
            Tensor::column(t.data().chunks(c.max(1)).map(|row| row.iter().sum()).collect())
        })
    }

    /// `[R x C] -> [1 x C]`.
    pub fn sum_cols(self) -> Var<'t> {
        self.unary(Op::SumCols(self.id), |t| {
            let (r, c) = t.shape();
            let mut out = vec![0.0; c];
            for row in 0..r {
                for col in 0..c {
                    out[col] += t.data()[row * c + col];
                }
            }
            Tensor::row(out)
        })
    }

    /// Sums consecutive groups of `group` rows: `[R x C] -> [R/group x C]`.
    pub fn group_sum_rows(self, group: usize) -> Var<'t> {
        self.unary(Op::GroupSumRows(self.id, group), |t| {
            let (r, c) = t.shape();
            assert!(group > 0 && r % group == 0, "row count not divisible by group");
            let mut out = vec![0.0; (r / group) * c];
            for row in 0..r {
                let dst = row / group;
                for col in 0..c {
                    out[dst * c + col] += t.data()[row * c + col];
                }
            }
            Tensor::new(r / group, c, out)
        })
    }

    /// Repeats every row `times` times consecutively.
    pub fn repeat_rows(self, times: usize) -> Var<'t> {
        self.unary(Op::RepeatRows(self.id, times), |t| {
            let (r, c) = t.shape();
            let mut out = Vec::with_capacity(r * times * c);
            for row in t.data().chunks(c.max(1)) {
                for _ in 0..times {
                    out.extend_from_slice(row);
                }
            }
            Tensor::new(r * times, c, out)
        })
    }

    /// Exclusive prefix sum along each row.
    pub fn cumsum_exclusive(self) -> Var<'t> {
        self.unary(Op::CumsumExcl(self.id), |t| {
            let (r, c) = t.shape();
            let mut out = vec![0.0; r * c];
            for row in 0..r {
                let mut acc = 0.0;
                for col in 0..c {
                    out[row * c + col] = acc;
                    acc += t.data()[row * c + col];
                }
            }
            Tensor::new(r, c, out)
        })
    }

    /// L2 norm over all entries.
    pub fn norm(self) -> Var<'t> {
        self.unary(Op::Norm(self.id), |t| Tensor::scalar(t.norm()))
    }

    pub fn reshape(self, rows: usize, cols: usize) -> Var<'t> {
        self.unary(Op::Reshape(self.id), |t| t.clone().reshaped(rows, cols))
    }

    pub fn transpose(self) -> Var<'t> {
        self.unary(Op::Transpose(self.id), |t| t.transposed())
    }

    pub fn slice_cols(self, start: usize, len: usize) -> Var<'t> {
        self.unary(Op::SliceCols(self.id, start), |t| {
            let (r, c) = t.shape();
            assert!(start + len <= c, "column slice out of range");
            let mut out = Vec::with_capacity(r * len);
            for row in 0..r {
                out.extend_from_slice(&t.data()[row * c + start..row * c + start + len]);
            }
            Tensor::new(r, len, out)
        })
    }

    pub fn slice_rows(self, start: usize, len: usize) -> Var<'t> {
        self.unary(Op::SliceRows(self.id, start), |t| {
            let c = t.cols();
            assert!(start + len <= t.rows(), "row slice out of range");
            Tensor::new(len, c, t.data()[start * c..(start + len) * c].to_vec())
        })
    }

    /// Scalar entry `i` (row-major) of the tensor.
    pub fn index(self, i: usize) -> Var<'t> {
        self.unary(Op::Index(self.id, i), |t| Tensor::scalar(t.data()[i]))
    }

    /// Splits a row or column vector into scalar vars.
    pub fn components(self) -> Vec<Var<'t>> {
        let n = self.with_value(|t| t.len());
        (0..n).map(|i| self.index(i)).collect()
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, Op::Add(self.id, rhs.id), |a, b| a + b)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, Op::Sub(self.id, rhs.id), |a, b| a - b)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, Op::Mul(self.id, rhs.id), |a, b| a * b)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, Op::Div(self.id, rhs.id), |a, b| a / b)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.unary(Op::Neg(self.id), |t| t.map(|x| -x))
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, c: f64) -> Var<'t> {
        self.unary(Op::AddConst(self.id), |t| t.map(|x| x + c))
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, c: f64) -> Var<'t> {
        self + (-c)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, c: f64) -> Var<'t> {
        self.unary(Op::MulConst(self.id, c), |t| t.map(|x| x * c))
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, c: f64) -> Var<'t> {
        self * (1.0 / c)
    }
}

impl<'t> Mul<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn mul(self, v: Var<'t>) -> Var<'t> {
        v * self
    }
}

impl<'t> Add<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn add(self, v: Var<'t>) -> Var<'t> {
        v + self
    }
}

impl<'t> Sub<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn sub(self, v: Var<'t>) -> Var<'t> {
        (-v) + self
    }
}

impl<'t> Div<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn div(self, v: Var<'t>) -> Var<'t> {
        v.tape().scalar(self) / v
    }
}

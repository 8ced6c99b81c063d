//! Tape-based reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! A [`Graph`] is an append-only tape. Leaves are registered with
//! [`Graph::param`] (differentiable) or [`Graph::constant`]; every operator
//! appends one node holding its output value and the operand ids needed by
//! its backward rule. [`Graph::backward`] walks the tape once in reverse from
//! a scalar root and leaves the accumulated gradient on every differentiable
//! node it reaches.
//!
//! ```
//! use focalmcc_core::autodiff::{Graph, Tensor};
//!
//! let mut g = Graph::new();
//! let x = g.param(Tensor::vector(vec![1.0, 2.0, 3.0]));
//! let sq = g.mul(x, x).unwrap();
//! let s = g.sum(sq);
//! g.backward(s).unwrap();
//! assert_eq!(g.grad(x).unwrap(), &[2.0, 4.0, 6.0]);
//! ```
//!
//! Broadcasting is limited to a single-element operand against a tensor of
//! any shape. Every other shape mismatch is an error.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Dense row-major array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape {
                op: "tensor",
                left: shape,
                right: vec![data.len()],
            });
        }
        Ok(Self { shape, data })
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> Option<f64> {
        (self.data.len() == 1).then(|| self.data[0])
    }
}

/// Handle to a node on a [`Graph`] tape. Only meaningful for the graph that
/// created it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    AddScalar(usize),
    MulScalar(usize, f64),
    RSubScalar(usize),
    Pow(usize, f64),
    Exp(usize),
    Log(usize),
    Sqrt(usize),
    Sigmoid(usize),
    Tanh(usize),
    Relu(usize),
    Clamp(usize, f64, f64),
    Sum(usize),
    Mean(usize),
    Concat(Vec<usize>),
    Slice {
        src: usize,
        start: usize,
        end: usize,
    },
    Reshape(usize),
}

/// Gradient accumulator of node `i`, created zeroed on first use.
fn slot<'g>(grads: &'g mut [Option<Vec<f64>>], nodes: &[Node], i: usize) -> &'g mut [f64] {
    grads[i]
        .get_or_insert_with(|| vec![0.0; nodes[i].value.numel()])
        .as_mut_slice()
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    requires_grad: bool,
    grad: Option<Vec<f64>>,
    op: Op,
}

/// Append-only operation tape. Confined to one thread; independent graphs
/// share nothing.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    backward_done: bool,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Splits a shape into (leading extent, last-axis extent).
fn split_last(shape: &[usize]) -> (usize, usize) {
    match shape.split_last() {
        Some((&last, lead)) => (lead.iter().product(), last),
        None => (1, 1),
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of nodes on the tape.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, requires_grad: bool, op: Op) -> Var {
        debug_assert!(
            !self.backward_done,
            "recording after backward without reset"
        );
        self.nodes.push(Node {
            value,
            requires_grad,
            grad: None,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    /// Differentiable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, true, Op::Leaf)
    }

    /// Non-differentiable leaf.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, false, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Scalar value of a one-element node.
    pub fn item(&self, v: Var) -> f64 {
        self.nodes[v.0].value.data[0]
    }

    /// Accumulated gradient; `None` until `backward` reached this node.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn rg(&self, ids: &[usize]) -> bool {
        ids.iter().any(|&i| self.nodes[i].requires_grad)
    }

    /// Drops every node recorded after the leading run of leaves, clears all
    /// gradients and re-arms `backward`.
    pub fn reset(&mut self) {
        let keep = self
            .nodes
            .iter()
            .position(|n| !matches!(n.op, Op::Leaf))
            .unwrap_or(self.nodes.len());
        self.nodes.truncate(keep);
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.backward_done = false;
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::Shape {
                op: "matmul",
                left: sa.to_vec(),
                right: sb.to_vec(),
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![0.0; m * n];
        matmul_into(
            &self.nodes[a.0].value.data,
            &self.nodes[b.0].value.data,
            &mut out,
            m,
            k,
            n,
        );
        let rg = self.rg(&[a.0, b.0]);
        Ok(self.push(Tensor::new(vec![m, n], out)?, rg, Op::MatMul(a.0, b.0)))
    }

    fn binary(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let shape = if ta.shape == tb.shape || tb.numel() == 1 {
            ta.shape.clone()
        } else if ta.numel() == 1 {
            tb.shape.clone()
        } else {
            return Err(Error::Shape {
                op: name,
                left: ta.shape.clone(),
                right: tb.shape.clone(),
            });
        };
        let n: usize = shape.iter().product();
        let at = |t: &Tensor, i: usize| if t.numel() == 1 { t.data[0] } else { t.data[i] };
        let data: Vec<f64> = (0..n).map(|i| f(at(ta, i), at(tb, i))).collect();
        let rg = self.rg(&[a.0, b.0]);
        Ok(self.push(Tensor { shape, data }, rg, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a.0, b.0))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a.0, b.0))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a.0, b.0))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        if let Some(&z) = self.nodes[b.0].value.data.iter().find(|&&v| v == 0.0) {
            return Err(Error::Domain {
                op: "div",
                value: z,
            });
        }
        self.binary("div", a, b, |x, y| x / y, Op::Div(a.0, b.0))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let t = &self.nodes[a.0].value;
        let out = Tensor {
            shape: t.shape.clone(),
            data: t.data.iter().map(|&x| f(x)).collect(),
        };
        let rg = self.rg(&[a.0]);
        self.push(out, rg, op)
    }

    /// `a + c`
    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, |x| x + c, Op::AddScalar(a.0))
    }

    /// `a * c`
    pub fn mul_scalar(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, |x| x * c, Op::MulScalar(a.0, c))
    }

    /// `c - a`
    pub fn rsub_scalar(&mut self, c: f64, a: Var) -> Var {
        self.unary(a, |x| c - x, Op::RSubScalar(a.0))
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.mul_scalar(a, -1.0)
    }

    /// `a^c` with a constant exponent. Negative bases need an integral
    /// exponent.
    pub fn pow(&mut self, a: Var, c: f64) -> Result<Var> {
        if c != libm::trunc(c) {
            if let Some(&x) = self.nodes[a.0].value.data.iter().find(|&&x| x < 0.0) {
                return Err(Error::Domain {
                    op: "pow",
                    value: x,
                });
            }
        }
        Ok(self.unary(a, |x| libm::pow(x, c), Op::Pow(a.0, c)))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, libm::exp, Op::Exp(a.0))
    }

    /// Natural log. Callers clamp into the positive range first; any value
    /// `<= 0` (or NaN) is rejected.
    pub fn log(&mut self, a: Var) -> Result<Var> {
        if let Some(&x) = self.nodes[a.0].value.data.iter().find(|&&x| !(x > 0.0)) {
            return Err(Error::Domain {
                op: "log",
                value: x,
            });
        }
        Ok(self.unary(a, libm::log, Op::Log(a.0)))
    }

    pub fn sqrt(&mut self, a: Var) -> Result<Var> {
        if let Some(&x) = self.nodes[a.0].value.data.iter().find(|&&x| !(x >= 0.0)) {
            return Err(Error::Domain {
                op: "sqrt",
                value: x,
            });
        }
        Ok(self.unary(a, libm::sqrt, Op::Sqrt(a.0)))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, sigmoid, Op::Sigmoid(a.0))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, libm::tanh, Op::Tanh(a.0))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| if x > 0.0 { x } else { 0.0 }, Op::Relu(a.0))
    }

    /// Clamp into `[lo, hi]`; the gradient passes only where the input was
    /// inside the closed interval.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        self.unary(a, |x| x.max(lo).min(hi), Op::Clamp(a.0, lo, hi))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.nodes[a.0].value.data.iter().sum();
        let rg = self.rg(&[a.0]);
        self.push(Tensor::scalar(s), rg, Op::Sum(a.0))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let t = &self.nodes[a.0].value;
        let m = t.data.iter().sum::<f64>() / t.numel() as f64;
        let rg = self.rg(&[a.0]);
        self.push(Tensor::scalar(m), rg, Op::Mean(a.0))
    }

    /// Concatenates along the last axis. Leading dimensions must agree.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Contract("concat of zero tensors".into()))?;
        let lead_shape = {
            let s = self.shape(*first);
            if s.is_empty() {
                return Err(Error::Shape {
                    op: "concat",
                    left: s.to_vec(),
                    right: s.to_vec(),
                });
            }
            s[..s.len() - 1].to_vec()
        };
        let mut widths = Vec::with_capacity(parts.len());
        for p in parts {
            let s = self.shape(*p);
            if s.is_empty() || s[..s.len() - 1] != lead_shape[..] {
                return Err(Error::Shape {
                    op: "concat",
                    left: self.shape(*first).to_vec(),
                    right: s.to_vec(),
                });
            }
            widths.push(s[s.len() - 1]);
        }
        let rows: usize = lead_shape.iter().product();
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for (p, &w) in parts.iter().zip(&widths) {
                data.extend_from_slice(&self.nodes[p.0].value.data[r * w..(r + 1) * w]);
            }
        }
        let mut shape = lead_shape;
        shape.push(total);
        let ids: Vec<usize> = parts.iter().map(|p| p.0).collect();
        let rg = self.rg(&ids);
        Ok(self.push(Tensor { shape, data }, rg, Op::Concat(ids)))
    }

    /// Selects `start..end` along the last axis.
    pub fn slice(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let t = &self.nodes[a.0].value;
        if t.shape.is_empty() {
            return Err(Error::Bounds {
                op: "slice",
                start,
                end,
                len: 0,
            });
        }
        let (rows, width) = split_last(&t.shape);
        if start > end || end > width {
            return Err(Error::Bounds {
                op: "slice",
                start,
                end,
                len: width,
            });
        }
        let w = end - start;
        let mut data = Vec::with_capacity(rows * w);
        for r in 0..rows {
            data.extend_from_slice(&t.data[r * width + start..r * width + end]);
        }
        let mut shape = t.shape.clone();
        *shape.last_mut().expect("non-empty") = w;
        let rg = self.rg(&[a.0]);
        Ok(self.push(
            Tensor { shape, data },
            rg,
            Op::Slice {
                src: a.0,
                start,
                end,
            },
        ))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let t = &self.nodes[a.0].value;
        if shape.iter().product::<usize>() != t.numel() {
            return Err(Error::Shape {
                op: "reshape",
                left: t.shape.clone(),
                right: shape.to_vec(),
            });
        }
        let out = Tensor {
            shape: shape.to_vec(),
            data: t.data.clone(),
        };
        let rg = self.rg(&[a.0]);
        Ok(self.push(out, rg, Op::Reshape(a.0)))
    }

    /// Reverse sweep from a scalar root. Populates the gradient of every
    /// differentiable node that the root depends on.
    pub fn backward(&mut self, root: Var) -> Result<()> {
        if self.backward_done {
            return Err(Error::BackwardTwice);
        }
        let root_shape = self.shape(root);
        if self.nodes[root.0].value.numel() != 1 {
            return Err(Error::NonScalarRoot(root_shape.to_vec()));
        }
        self.backward_done = true;
        if !self.nodes[root.0].requires_grad {
            return Ok(());
        }

        let mut grads: Vec<Option<Vec<f64>>> = vec![None; root.0 + 1];
        grads[root.0] = Some(vec![1.0]);

        for id in (0..=root.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            self.propagate(id, &g, &mut grads);
            self.nodes[id].grad = Some(g);
        }
        Ok(())
    }

    fn propagate(&self, id: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let nodes = &self.nodes;
        let out = &nodes[id].value;
        let wants = |i: usize| nodes[i].requires_grad;

        match nodes[id].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (sa, sb) = (&nodes[a].value.shape, &nodes[b].value.shape);
                let (m, k, n) = (sa[0], sa[1], sb[1]);
                if wants(a) {
                    matmul_bt_into(g, &nodes[b].value.data, slot(grads, nodes, a), m, n, k);
                }
                if wants(b) {
                    matmul_at_into(&nodes[a].value.data, g, slot(grads, nodes, b), m, k, n);
                }
            }
            Op::Add(a, b) | Op::Sub(a, b) => {
                let sign = if matches!(nodes[id].op, Op::Sub(..)) {
                    -1.0
                } else {
                    1.0
                };
                if wants(a) {
                    accumulate(slot(grads, nodes, a), g.iter().copied());
                }
                if wants(b) {
                    accumulate(slot(grads, nodes, b), g.iter().map(|&x| sign * x));
                }
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (&nodes[a].value, &nodes[b].value);
                if wants(a) {
                    accumulate(
                        slot(grads, nodes, a),
                        g.iter().enumerate().map(|(i, &x)| x * bcast(tb, i)),
                    );
                }
                if wants(b) {
                    accumulate(
                        slot(grads, nodes, b),
                        g.iter().enumerate().map(|(i, &x)| x * bcast(ta, i)),
                    );
                }
            }
            Op::Div(a, b) => {
                let (ta, tb) = (&nodes[a].value, &nodes[b].value);
                if wants(a) {
                    accumulate(
                        slot(grads, nodes, a),
                        g.iter().enumerate().map(|(i, &x)| x / bcast(tb, i)),
                    );
                }
                if wants(b) {
                    accumulate(
                        slot(grads, nodes, b),
                        g.iter().enumerate().map(|(i, &x)| {
                            let d = bcast(tb, i);
                            -x * bcast(ta, i) / (d * d)
                        }),
                    );
                }
            }
            Op::AddScalar(a) | Op::Reshape(a) => {
                accumulate(slot(grads, nodes, a), g.iter().copied())
            }
            Op::MulScalar(a, c) => accumulate(slot(grads, nodes, a), g.iter().map(|&x| x * c)),
            Op::RSubScalar(a) => accumulate(slot(grads, nodes, a), g.iter().map(|&x| -x)),
            Op::Pow(a, c) => {
                let xs = &nodes[a].value.data;
                accumulate(
                    slot(grads, nodes, a),
                    g.iter().zip(xs).map(|(&gi, &x)| {
                        if c == 0.0 {
                            0.0
                        } else {
                            gi * c * libm::pow(x, c - 1.0)
                        }
                    }),
                );
            }
            Op::Exp(a) => accumulate(
                slot(grads, nodes, a),
                g.iter().zip(&out.data).map(|(&gi, &y)| gi * y),
            ),
            Op::Log(a) => {
                let xs = &nodes[a].value.data;
                accumulate(
                    slot(grads, nodes, a),
                    g.iter().zip(xs).map(|(&gi, &x)| gi / x),
                );
            }
            Op::Sqrt(a) => accumulate(
                slot(grads, nodes, a),
                g.iter().zip(&out.data).map(|(&gi, &y)| gi * 0.5 / y),
            ),
            Op::Sigmoid(a) => accumulate(
                slot(grads, nodes, a),
                g.iter().zip(&out.data).map(|(&gi, &y)| gi * y * (1.0 - y)),
            ),
            Op::Tanh(a) => accumulate(
                slot(grads, nodes, a),
                g.iter().zip(&out.data).map(|(&gi, &y)| gi * (1.0 - y * y)),
            ),
            Op::Relu(a) => {
                let xs = &nodes[a].value.data;
                accumulate(
                    slot(grads, nodes, a),
                    g.iter()
                        .zip(xs)
                        .map(|(&gi, &x)| if x > 0.0 { gi } else { 0.0 }),
                );
            }
            Op::Clamp(a, lo, hi) => {
                let xs = &nodes[a].value.data;
                accumulate(
                    slot(grads, nodes, a),
                    g.iter()
                        .zip(xs)
                        .map(|(&gi, &x)| if x >= lo && x <= hi { gi } else { 0.0 }),
                );
            }
            Op::Sum(a) => {
                let s = slot(grads, nodes, a);
                s.iter_mut().for_each(|v| *v += g[0]);
            }
            Op::Mean(a) => {
                let s = slot(grads, nodes, a);
                let scale = g[0] / s.len() as f64;
                s.iter_mut().for_each(|v| *v += scale);
            }
            Op::Concat(ref parts) => {
                let (rows, total) = split_last(&out.shape);
                let mut offset = 0;
                for &p in parts {
                    let (_, w) = split_last(&nodes[p].value.shape);
                    if wants(p) {
                        let s = slot(grads, nodes, p);
                        for r in 0..rows {
                            for c in 0..w {
                                s[r * w + c] += g[r * total + offset + c];
                            }
                        }
                    }
                    offset += w;
                }
            }
            Op::Slice { src, start, end } => {
                let (rows, width) = split_last(&nodes[src].value.shape);
                let w = end - start;
                let s = slot(grads, nodes, src);
                for r in 0..rows {
                    for c in 0..w {
                        s[r * width + start + c] += g[r * w + c];
                    }
                }
            }
        }
    }
}

fn bcast(t: &Tensor, i: usize) -> f64 {
    if t.numel() == 1 {
        t.data[0]
    } else {
        t.data[i]
    }
}

/// Adds `contrib` into `dst`; a one-element `dst` receives the sum
/// (scalar broadcast).
fn accumulate(dst: &mut [f64], contrib: impl Iterator<Item = f64>) {
    if dst.len() == 1 {
        dst[0] += contrib.sum::<f64>();
    } else {
        dst.iter_mut().zip(contrib).for_each(|(d, c)| *d += c);
    }
}

/// `out[m×n] += a[m×k] · b[k×n]`. Zero entries of `a` are skipped, which
/// turns one-hot inputs into row gathers.
fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            row.iter_mut().zip(brow).for_each(|(o, &bv)| *o += aip * bv);
        }
    }
}

/// Dot product over four interleaved partial sums, so the loop vectorizes.
fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (xc, xr) = x.split_at(x.len() - x.len() % 4);
    let (yc, yr) = y.split_at(xc.len());
    for (a, b) in xc.chunks_exact(4).zip(yc.chunks_exact(4)) {
        for l in 0..4 {
            acc[l] += a[l] * b[l];
        }
    }
    let tail: f64 = xr.iter().zip(yr).map(|(a, b)| a * b).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `out[m×k] += g[m×n] · bᵀ` where `b` is `k×n`.
fn matmul_bt_into(g: &[f64], b: &[f64], out: &mut [f64], m: usize, n: usize, k: usize) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let brow = &b[p * n..(p + 1) * n];
            out[i * k + p] += dot(grow, brow);
        }
    }
}

/// `out[k×n] += aᵀ · g` where `a` is `m×k` and `g` is `m×n`.
fn matmul_at_into(a: &[f64], g: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let orow = &mut out[p * n..(p + 1) * n];
            orow.iter_mut()
                .zip(grow)
                .for_each(|(o, &gv)| *o += aip * gv);
        }
    }
}

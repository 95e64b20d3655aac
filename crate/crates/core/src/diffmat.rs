//! Reverse-mode differentiation over dense matrices.
//!
//! A [`Tape`] records primitive applications in evaluation order. Every value
//! is a matrix; scalars are `1 × 1`. [`Tape::backward`] walks the record in
//! reverse and returns gradients for every leaf created with [`Tape::leaf`].
//!
//! ```
//! use graphinv::diffmat::Tape;
//! use ndarray::array;
//!
//! let mut tape = Tape::new();
//! let b = tape.leaf(array![[3.0, 4.0]]);
//! let norm = tape.l2_norm(b).unwrap();
//! let grads = tape.backward(norm).unwrap();
//! let g = grads.wrt(b).unwrap();
//! assert!((g[[0, 0]] - 0.6).abs() < 1e-12 && (g[[0, 1]] - 0.8).abs() < 1e-12);
//! ```

use std::collections::BTreeMap;

use ndarray::{s, Array2, Axis};

use crate::linalg::matmul;
use crate::{Error, Matrix, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    id: usize,
    rows: usize,
    cols: usize,
}

impl Var {
    pub fn id(self) -> usize {
        self.id
    }

    pub fn shape(self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_scalar(self) -> bool {
        self.rows == 1 && self.cols == 1
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Constant,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, f64),
    Hadamard(Var, Var),
    Transpose(Var),
    Relu(Var),
    RowSoftmax(Var),
    CrossEntropy {
        logits: Var,
        labels: Vec<usize>,
        rows: Vec<usize>,
    },
    TraceQuad {
        x: Var,
        m: Var,
    },
    SquaredNorm(Var),
    L2Norm(Var),
    Sum(Var),
    RowNormalize {
        a: Var,
        delta: f64,
    },
    RowMeanAggregate {
        adj: Var,
        h: Var,
        delta: f64,
    },
    ConcatCols(Var, Var),
    Flatten(Var),
    Laplacian(Var),
    SymNormalize {
        a: Var,
        delta: f64,
    },
    UnflattenSym {
        b: Var,
        n: usize,
    },
}

/// Primitive kinds, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Leaf,
    Constant,
    MatMul,
    Add,
    Sub,
    Scale,
    Hadamard,
    Transpose,
    Relu,
    RowSoftmax,
    CrossEntropy,
    TraceQuad,
    SquaredNorm,
    L2Norm,
    Sum,
    RowNormalize,
    RowMeanAggregate,
    ConcatCols,
    Flatten,
    Laplacian,
    SymNormalize,
    UnflattenSym,
}

impl Op {
    fn kind(&self) -> Kind {
        match self {
            Op::Leaf => Kind::Leaf,
            Op::Constant => Kind::Constant,
            Op::MatMul(..) => Kind::MatMul,
            Op::Add(..) => Kind::Add,
            Op::Sub(..) => Kind::Sub,
            Op::Scale(..) => Kind::Scale,
            Op::Hadamard(..) => Kind::Hadamard,
            Op::Transpose(..) => Kind::Transpose,
            Op::Relu(..) => Kind::Relu,
            Op::RowSoftmax(..) => Kind::RowSoftmax,
            Op::CrossEntropy { .. } => Kind::CrossEntropy,
            Op::TraceQuad { .. } => Kind::TraceQuad,
            Op::SquaredNorm(..) => Kind::SquaredNorm,
            Op::L2Norm(..) => Kind::L2Norm,
            Op::Sum(..) => Kind::Sum,
            Op::RowNormalize { .. } => Kind::RowNormalize,
            Op::RowMeanAggregate { .. } => Kind::RowMeanAggregate,
            Op::ConcatCols(..) => Kind::ConcatCols,
            Op::Flatten(..) => Kind::Flatten,
            Op::Laplacian(..) => Kind::Laplacian,
            Op::SymNormalize { .. } => Kind::SymNormalize,
            Op::UnflattenSym { .. } => Kind::UnflattenSym,
        }
    }
}

struct Node {
    value: Matrix,
    op: Op,
    needs_grad: bool,
}

/// Gradients produced by [`Tape::backward`], keyed by leaf.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    by_leaf: BTreeMap<usize, Matrix>,
}

impl Gradients {
    pub fn wrt(&self, leaf: Var) -> Option<&Matrix> {
        self.by_leaf.get(&leaf.id)
    }

    pub fn take(&mut self, leaf: Var) -> Option<Matrix> {
        self.by_leaf.remove(&leaf.id)
    }

    pub fn len(&self) -> usize {
        self.by_leaf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_leaf.is_empty()
    }
}

/// Single-owner record of a computation. Ids increase monotonically and every
/// primitive references only earlier ids, so the record is a topologically
/// ordered DAG by construction.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn scalar(v: f64) -> Matrix {
    Array2::from_elem((1, 1), v)
}

fn same_shape(a: Var, b: Var, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(format!(
            "{what}: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

fn square(a: Var, what: &str) -> Result<usize> {
    if a.rows != a.cols {
        return Err(Error::shape(format!(
            "{what} needs a square input, got {:?}",
            a.shape()
        )));
    }
    Ok(a.rows)
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
        &self.nodes[v.id].value
    }

    /// Value of a `1 × 1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.id].value[[0, 0]]
    }

    pub fn kind(&self, v: Var) -> Kind {
        self.nodes[v.id].op.kind()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.id].needs_grad
    }

    fn push(&mut self, value: Matrix, op: Op, needs_grad: bool) -> Var {
        let (rows, cols) = value.dim();
        let id = self.nodes.len();
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var { id, rows, cols }
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.id].needs_grad)
    }

    /// Differentiable input.
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Input that receives no gradient.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Constant, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        if a.cols != b.rows {
            return Err(Error::shape(format!(
                "matmul {:?} x {:?}",
                a.shape(),
                b.shape()
            )));
        }
        let v = matmul(&self.value(a).view(), &self.value(b).view());
        let g = self.needs(&[a, b]);
        Ok(self.push(v, Op::MatMul(a, b), g))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape(a, b, "add")?;
        let v = self.value(a) + self.value(b);
        let g = self.needs(&[a, b]);
        Ok(self.push(v, Op::Add(a, b), g))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape(a, b, "subtract")?;
        let v = self.value(a) - self.value(b);
        let g = self.needs(&[a, b]);
        Ok(self.push(v, Op::Sub(a, b), g))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a) * c;
        let g = self.needs(&[a]);
        self.push(v, Op::Scale(a, c), g)
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape(a, b, "hadamard")?;
        let v = self.value(a) * self.value(b);
        let g = self.needs(&[a, b]);
        Ok(self.push(v, Op::Hadamard(a, b), g))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).t().to_owned();
        let g = self.needs(&[a]);
        self.push(v, Op::Transpose(a), g)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(|x| x.max(0.0));
        let g = self.needs(&[a]);
        self.push(v, Op::Relu(a), g)
    }

    pub fn row_softmax(&mut self, a: Var) -> Result<Var> {
        if a.cols == 0 {
            return Err(Error::shape("row-softmax over empty rows"));
        }
        let v = softmax_rows(self.value(a));
        let g = self.needs(&[a]);
        Ok(self.push(v, Op::RowSoftmax(a), g))
    }

    /// Mean over `rows` of `-ln softmax(logits)[r, labels[r]]`. Softmax and
    /// log-likelihood are fused with a row-max shift.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize], rows: &[usize]) -> Result<Var> {
        if labels.len() != logits.rows {
            return Err(Error::shape(format!(
                "{} labels for {} logit rows",
                labels.len(),
                logits.rows
            )));
        }
        if logits.cols == 0 {
            return Err(Error::shape("cross-entropy over zero classes"));
        }
        if rows.is_empty() {
            return Err(Error::input("cross-entropy over an empty row set"));
        }
        let z = self.value(logits);
        let mut total = 0.0;
        for &r in rows {
            if r >= logits.rows {
                return Err(Error::input(format!("row {r} out of range")));
            }
            let y = labels[r];
            if y >= logits.cols {
                return Err(Error::input(format!(
                    "label {y} out of range for {} classes",
                    logits.cols
                )));
            }
            let row = z.row(r);
            let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            total += lse - row[y];
        }
        let v = scalar(total / rows.len() as f64);
        let g = self.needs(&[logits]);
        Ok(self.push(
            v,
            Op::CrossEntropy {
                logits,
                labels: labels.to_vec(),
                rows: rows.to_vec(),
            },
            g,
        ))
    }

    /// `tr(xᵀ m x)` for square `m`.
    pub fn trace_quad(&mut self, x: Var, m: Var) -> Result<Var> {
        let n = square(m, "trace-quadratic-form")?;
        if x.rows != n {
            return Err(Error::shape(format!(
                "trace-quadratic-form x {:?} vs m {:?}",
                x.shape(),
                m.shape()
            )));
        }
        let mx = matmul(&self.value(m).view(), &self.value(x).view());
        let v = scalar(crate::linalg::frobenius_dot(
            &self.value(x).view(),
            &mx.view(),
        ));
        let g = self.needs(&[x, m]);
        Ok(self.push(v, Op::TraceQuad { x, m }, g))
    }

    /// `Σ a_ij²`, i.e. `tr(aᵀ a)`.
    pub fn squared_norm(&mut self, a: Var) -> Var {
        let v = scalar(self.value(a).iter().map(|x| x * x).sum());
        let g = self.needs(&[a]);
        self.push(v, Op::SquaredNorm(a), g)
    }

    /// Euclidean norm of all entries.
    pub fn l2_norm(&mut self, a: Var) -> Result<Var> {
        let v = scalar(self.value(a).iter().map(|x| x * x).sum::<f64>().sqrt());
        let g = self.needs(&[a]);
        Ok(self.push(v, Op::L2Norm(a), g))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = scalar(self.value(a).sum());
        let g = self.needs(&[a]);
        self.push(v, Op::Sum(a), g)
    }

    /// `a_ij / max(Σ_k a_ik, δ)`.
    pub fn row_normalize(&mut self, a: Var, delta: f64) -> Var {
        let mut v = self.value(a).clone();
        for mut row in v.axis_iter_mut(Axis(0)) {
            let s = row.sum().max(delta);
            row.mapv_inplace(|x| x / s);
        }
        let g = self.needs(&[a]);
        self.push(v, Op::RowNormalize { a, delta }, g)
    }

    /// Weighted neighbor mean `(adj · h)_i / max(Σ_j adj_ij, δ)`.
    pub fn row_mean_aggregate(&mut self, adj: Var, h: Var, delta: f64) -> Result<Var> {
        if adj.cols != h.rows {
            return Err(Error::shape(format!(
                "row-mean-aggregate adj {:?} vs h {:?}",
                adj.shape(),
                h.shape()
            )));
        }
        let a = self.value(adj);
        let mut v = matmul(&a.view(), &self.value(h).view());
        let sums = a.sum_axis(Axis(1));
        for (mut row, s) in v.axis_iter_mut(Axis(0)).zip(sums.iter()) {
            let s = s.max(delta);
            row.mapv_inplace(|x| x / s);
        }
        let g = self.needs(&[adj, h]);
        Ok(self.push(v, Op::RowMeanAggregate { adj, h, delta }, g))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        if a.rows != b.rows {
            return Err(Error::shape(format!(
                "concat-columns {:?} with {:?}",
                a.shape(),
                b.shape()
            )));
        }
        let v = ndarray::concatenate(Axis(1), &[self.value(a).view(), self.value(b).view()])
            .expect("row counts checked");
        let g = self.needs(&[a, b]);
        Ok(self.push(v, Op::ConcatCols(a, b), g))
    }

    /// Row-major reshape to `1 × (rows·cols)`.
    pub fn flatten(&mut self, a: Var) -> Var {
        let m = self.value(a);
        let flat: Vec<f64> = m.iter().copied().collect();
        let v = Array2::from_shape_vec((1, flat.len()), flat).expect("length matches");
        let g = self.needs(&[a]);
        self.push(v, Op::Flatten(a), g)
    }

    /// `diag(Σ_j a_ij) - a`.
    pub fn laplacian(&mut self, a: Var) -> Result<Var> {
        square(a, "laplacian")?;
        let m = self.value(a);
        let d = m.sum_axis(Axis(1));
        let mut v = -m.clone();
        for (i, di) in d.iter().enumerate() {
            v[[i, i]] += di;
        }
        let g = self.needs(&[a]);
        Ok(self.push(v, Op::Laplacian(a), g))
    }

    /// `D^{-1/2} a D^{-1/2}` with `D = diag(max(Σ_j a_ij, δ))`. Applied to
    /// `A + I` this is GCN renormalization.
    pub fn sym_normalize(&mut self, a: Var, delta: f64) -> Result<Var> {
        square(a, "sym-normalize")?;
        let m = self.value(a);
        let r: Vec<f64> = m
            .sum_axis(Axis(1))
            .iter()
            .map(|d| 1.0 / d.max(delta).sqrt())
            .collect();
        let mut v = m.clone();
        for ((i, j), x) in v.indexed_iter_mut() {
            *x *= r[i] * r[j];
        }
        let g = self.needs(&[a]);
        Ok(self.push(v, Op::SymNormalize { a, delta }, g))
    }

    /// Symmetric zero-diagonal `n × n` matrix from a flattened strict upper
    /// triangle stored as a `1 × n(n-1)/2` row.
    pub fn unflatten_sym(&mut self, b: Var, n: usize) -> Result<Var> {
        if b.rows != 1 || b.cols != crate::graph::upper_tri_len(n) {
            return Err(Error::shape(format!(
                "unflatten expects 1x{}, got {:?}",
                crate::graph::upper_tri_len(n),
                b.shape()
            )));
        }
        let flat: Vec<f64> = self.value(b).iter().copied().collect();
        let v = crate::graph::upper_tri_unflatten(&flat, n)?;
        let g = self.needs(&[b]);
        Ok(self.push(v, Op::UnflattenSym { b, n }, g))
    }

    /// Gradients of the scalar `root` with respect to every leaf. Leaves that
    /// do not influence `root` get exact zeros.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        if !root.is_scalar() {
            return Err(Error::Contract(format!(
                "backward root must be 1x1, got {:?}",
                root.shape()
            )));
        }
        if root.id >= self.nodes.len() {
            return Err(Error::Contract("root is not on this tape".into()));
        }
        let mut grads: Vec<Option<Matrix>> = Vec::with_capacity(root.id + 1);
        grads.resize_with(root.id + 1, || None);
        grads[root.id] = Some(scalar(1.0));

        let mut out = Gradients::default();
        for id in (0..=root.id).rev() {
            let node = &self.nodes[id];
            if matches!(node.op, Op::Leaf) {
                let g = grads[id]
                    .take()
                    .unwrap_or_else(|| Array2::zeros(node.value.dim()));
                out.by_leaf.insert(id, g);
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            if !node.needs_grad {
                continue;
            }
            self.propagate(node, &g, &mut grads);
        }
        Ok(out)
    }

    fn accumulate(&self, grads: &mut [Option<Matrix>], v: Var, g: Matrix) {
        if !self.nodes[v.id].needs_grad {
            return;
        }
        debug_assert_eq!(g.dim(), v.shape(), "gradient shape for node {}", v.id);
        match &mut grads[v.id] {
            Some(acc) => *acc += &g,
            slot @ None => *slot = Some(g),
        }
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.id].needs_grad
    }

    fn propagate(&self, node: &Node, g: &Matrix, grads: &mut [Option<Matrix>]) {
        match &node.op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul(a, b) => {
                if self.wants(*a) {
                    let ga = matmul(&g.view(), &self.value(*b).t());
                    self.accumulate(grads, *a, ga);
                }
                if self.wants(*b) {
                    let gb = matmul(&self.value(*a).t(), &g.view());
                    self.accumulate(grads, *b, gb);
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, -g);
            }
            Op::Scale(a, c) => self.accumulate(grads, *a, g * *c),
            Op::Hadamard(a, b) => {
                if self.wants(*a) {
                    self.accumulate(grads, *a, g * self.value(*b));
                }
                if self.wants(*b) {
                    self.accumulate(grads, *b, g * self.value(*a));
                }
            }
            Op::Transpose(a) => self.accumulate(grads, *a, g.t().to_owned()),
            Op::Relu(a) => {
                let mut ga = g.clone();
                ndarray::Zip::from(&mut ga)
                    .and(self.value(*a))
                    .for_each(|d, &x| {
                        if x <= 0.0 {
                            *d = 0.0;
                        }
                    });
                self.accumulate(grads, *a, ga);
            }
            Op::RowSoftmax(a) => {
                let y = &node.value;
                let mut ga = Array2::zeros(y.dim());
                for i in 0..y.nrows() {
                    let dot: f64 = g.row(i).dot(&y.row(i));
                    for j in 0..y.ncols() {
                        ga[[i, j]] = y[[i, j]] * (g[[i, j]] - dot);
                    }
                }
                self.accumulate(grads, *a, ga);
            }
            Op::CrossEntropy {
                logits,
                labels,
                rows,
            } => {
                let scale = g[[0, 0]] / rows.len() as f64;
                let p = softmax_rows(self.value(*logits));
                let mut ga = Array2::zeros(p.dim());
                for &r in rows {
                    let mut row = ga.row_mut(r);
                    row.scaled_add(scale, &p.row(r));
                    row[labels[r]] -= scale;
                }
                self.accumulate(grads, *logits, ga);
            }
            Op::TraceQuad { x, m } => {
                let c = g[[0, 0]];
                let xv = self.value(*x);
                if self.wants(*m) {
                    let gm = matmul(&xv.view(), &xv.t()) * c;
                    self.accumulate(grads, *m, gm);
                }
                if self.wants(*x) {
                    let mv = self.value(*m);
                    let gx = (matmul(&mv.view(), &xv.view()) + matmul(&mv.t(), &xv.view())) * c;
                    self.accumulate(grads, *x, gx);
                }
            }
            Op::SquaredNorm(a) => {
                let c = 2.0 * g[[0, 0]];
                self.accumulate(grads, *a, self.value(*a) * c);
            }
            Op::L2Norm(a) => {
                let norm = node.value[[0, 0]];
                let av = self.value(*a);
                let ga = if norm > 0.0 {
                    av * (g[[0, 0]] / norm)
                } else {
                    Array2::zeros(av.dim())
                };
                self.accumulate(grads, *a, ga);
            }
            Op::Sum(a) => {
                self.accumulate(grads, *a, Array2::from_elem(a.shape(), g[[0, 0]]));
            }
            Op::RowNormalize { a, delta } => {
                let av = self.value(*a);
                let out = &node.value;
                let mut ga = Array2::zeros(av.dim());
                for i in 0..av.nrows() {
                    let raw = av.row(i).sum();
                    let s = raw.max(*delta);
                    let gi = g.row(i);
                    let mut row = ga.row_mut(i);
                    row.scaled_add(1.0 / s, &gi);
                    if raw > *delta {
                        let corr = gi.dot(&out.row(i)) / s;
                        row.mapv_inplace(|v| v - corr);
                    }
                }
                self.accumulate(grads, *a, ga);
            }
            Op::RowMeanAggregate { adj, h, delta } => {
                let av = self.value(*adj);
                let sums = av.sum_axis(Axis(1));
                let mut scaled_g = g.clone();
                for (mut row, s) in scaled_g.axis_iter_mut(Axis(0)).zip(sums.iter()) {
                    let s = s.max(*delta);
                    row.mapv_inplace(|v| v / s);
                }
                if self.wants(*h) {
                    let gh = matmul(&av.t(), &scaled_g.view());
                    self.accumulate(grads, *h, gh);
                }
                if self.wants(*adj) {
                    let mut ga = matmul(&scaled_g.view(), &self.value(*h).t());
                    for i in 0..av.nrows() {
                        if sums[i] > *delta {
                            let corr = scaled_g.row(i).dot(&node.value.row(i));
                            ga.row_mut(i).mapv_inplace(|v| v - corr);
                        }
                    }
                    self.accumulate(grads, *adj, ga);
                }
            }
            Op::ConcatCols(a, b) => {
                let ac = a.cols;
                if self.wants(*a) {
                    self.accumulate(grads, *a, g.slice(s![.., ..ac]).to_owned());
                }
                if self.wants(*b) {
                    self.accumulate(grads, *b, g.slice(s![.., ac..]).to_owned());
                }
            }
            Op::Flatten(a) => {
                let ga = Array2::from_shape_vec(a.shape(), g.iter().copied().collect())
                    .expect("length matches");
                self.accumulate(grads, *a, ga);
            }
            Op::Laplacian(a) => {
                let n = a.rows;
                let mut ga = -g.clone();
                for i in 0..n {
                    let gii = g[[i, i]];
                    ga.row_mut(i).mapv_inplace(|v| v + gii);
                }
                self.accumulate(grads, *a, ga);
            }
            Op::SymNormalize { a, delta } => {
                let av = self.value(*a);
                let n = a.rows;
                let degrees = av.sum_axis(Axis(1));
                let r: Vec<f64> = degrees.iter().map(|d| 1.0 / d.max(*delta).sqrt()).collect();
                let mut ga = Array2::zeros((n, n));
                // dr_i collects contributions from row i and column i.
                let mut dr = vec![0.0; n];
                for i in 0..n {
                    for j in 0..n {
                        let gij = g[[i, j]];
                        ga[[i, j]] = gij * r[i] * r[j];
                        let t = gij * av[[i, j]];
                        dr[i] += t * r[j];
                        dr[j] += t * r[i];
                    }
                }
                for i in 0..n {
                    if degrees[i] > *delta {
                        let dd = dr[i] * -0.5 * r[i].powi(3);
                        ga.row_mut(i).mapv_inplace(|v| v + dd);
                    }
                }
                self.accumulate(grads, *a, ga);
            }
            Op::UnflattenSym { b, n } => {
                let mut gb = Array2::zeros((1, b.cols));
                let mut k = 0;
                for i in 0..*n {
                    for j in (i + 1)..*n {
                        gb[[0, k]] = g[[i, j]] + g[[j, i]];
                        k += 1;
                    }
                }
                self.accumulate(grads, *b, gb);
            }
        }
    }
}

/// Numerically stable row-wise softmax.
pub fn softmax_rows(z: &Matrix) -> Matrix {
    let mut out = z.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    out
}

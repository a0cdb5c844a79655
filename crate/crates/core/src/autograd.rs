//! Reverse-mode differentiation over dense 2-D `f64` tensors.
//!
//! A [`Tape`] records every operation as it is evaluated. Values are
//! matrices (`rows x cols`); scalars are `1 x 1`. Each op checks operand
//! shapes, rejects non-finite results, and knows its own vector-Jacobian
//! product. [`Tape::backward`] walks the record once in reverse.
//!
//! Gradient conventions worth knowing:
//! * `relu` has derivative 0 at 0.
//! * `segment_max` routes the gradient to the first row attaining the max.
//! * The only broadcast is a `1 x c` bias added to every row ([`Tape::add_row`]).

use std::cell::{Cell, RefCell};

use ndarray::{s, Array2, Axis, Zip};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Matrix;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// How [`Tape::l2_normalize_rows`] treats short rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormFloor {
    /// `x / (|x| + eps)`
    Additive(f64),
    /// `x / max(|x|, eps)`
    Clamp(f64),
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    AddRow(usize, usize),
    Scale(usize, f64),
    AddScalar(usize),
    Relu(usize),
    Exp(usize),
    Log(usize),
    Transpose(usize),
    ConcatRows(Vec<usize>),
    ConcatCols(Vec<usize>),
    GatherRows(usize, Vec<usize>),
    SegmentSum(usize, Vec<usize>),
    SegmentMean(usize, Vec<usize>, Vec<usize>),
    /// argmax row per output element, `usize::MAX` for empty segments
    SegmentMax(usize, Array2<usize>),
    L2Normalize(usize, NormFloor, Vec<f64>),
    SumCols(usize),
    SumAll(usize),
    MeanAll(usize),
    Diagonal(usize),
}

struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    backward_done: Cell<bool>,
}

/// Gradients of a scalar with respect to every recorded value.
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// `None` when `v` does not influence the loss or does not require grad.
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient of `v`, zeros when it does not influence the loss.
    pub fn wrt(&self, v: Var) -> Matrix {
        self.get(v)
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(self.shapes[v.0]))
    }
}

fn dims(m: &Matrix) -> [usize; 2] {
    [m.nrows(), m.ncols()]
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

    /// Drops all recorded values so the tape can be reused.
    pub fn clear(&self) {
        self.nodes.borrow_mut().clear();
        self.backward_done.set(false);
    }

    pub fn value(&self, v: Var) -> Matrix {
        self.nodes.borrow()[v.0].value.clone()
    }

    pub fn scalar(&self, v: Var) -> f64 {
        let nodes = self.nodes.borrow();
        let m = &nodes[v.0].value;
        debug_assert_eq!(dims(m), [1, 1]);
        m[[0, 0]]
    }

    pub fn shape(&self, v: Var) -> [usize; 2] {
        dims(&self.nodes.borrow()[v.0].value)
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes.borrow()[v.0].requires_grad
    }

    /// Records an input. Parameters pass `requires_grad = true`.
    pub fn leaf(&self, value: Matrix, requires_grad: bool) -> Result<Var> {
        self.push(value, Op::Leaf, requires_grad, "leaf")
    }

    pub fn constant(&self, value: Matrix) -> Result<Var> {
        self.leaf(value, false)
    }

    fn push(&self, value: Matrix, op: Op, requires_grad: bool, name: &'static str) -> Result<Var> {
        if !value.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { op: name });
        }
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var(nodes.len() - 1))
    }

    fn unary(
        &self,
        a: Var,
        name: &'static str,
        f: impl FnOnce(&Matrix) -> Result<(Matrix, Op)>,
    ) -> Result<Var> {
        let (value, op, rg) = {
            let nodes = self.nodes.borrow();
            let node = &nodes[a.0];
            let (value, op) = f(&node.value)?;
            (value, op, node.requires_grad)
        };
        self.push(value, op, rg, name)
    }

    fn binary(
        &self,
        a: Var,
        b: Var,
        name: &'static str,
        f: impl FnOnce(&Matrix, &Matrix) -> Result<Matrix>,
        op: Op,
    ) -> Result<Var> {
        let (value, rg) = {
            let nodes = self.nodes.borrow();
            let (x, y) = (&nodes[a.0], &nodes[b.0]);
            (f(&x.value, &y.value)?, x.requires_grad || y.requires_grad)
        };
        self.push(value, op, rg, name)
    }

    fn same_shape(name: &'static str, x: &Matrix, y: &Matrix) -> Result<()> {
        if x.dim() != y.dim() {
            return Err(Error::shape(name, &dims(x), &dims(y)));
        }
        Ok(())
    }

    pub fn matmul(&self, a: Var, b: Var) -> Result<Var> {
        self.binary(
            a,
            b,
            "matmul",
            |x, y| {
                if x.ncols() != y.nrows() {
                    return Err(Error::shape("matmul", &dims(x), &dims(y)));
                }
                Ok(x.dot(y))
            },
            Op::MatMul(a.0, b.0),
        )
    }

    pub fn add(&self, a: Var, b: Var) -> Result<Var> {
        self.binary(
            a,
            b,
            "add",
            |x, y| {
                Self::same_shape("add", x, y)?;
                Ok(x + y)
            },
            Op::Add(a.0, b.0),
        )
    }

    pub fn sub(&self, a: Var, b: Var) -> Result<Var> {
        self.binary(
            a,
            b,
            "sub",
            |x, y| {
                Self::same_shape("sub", x, y)?;
                Ok(x - y)
            },
            Op::Sub(a.0, b.0),
        )
    }

    /// Elementwise product.
    pub fn mul(&self, a: Var, b: Var) -> Result<Var> {
        self.binary(
            a,
            b,
            "mul",
            |x, y| {
                Self::same_shape("mul", x, y)?;
                Ok(x * y)
            },
            Op::Mul(a.0, b.0),
        )
    }

    /// Elementwise quotient.
    pub fn div(&self, a: Var, b: Var) -> Result<Var> {
        self.binary(
            a,
            b,
            "div",
            |x, y| {
                Self::same_shape("div", x, y)?;
                Ok(x / y)
            },
            Op::Div(a.0, b.0),
        )
    }

    /// Adds a `1 x c` row to every row of `a`.
    pub fn add_row(&self, a: Var, bias: Var) -> Result<Var> {
        self.binary(
            a,
            bias,
            "add_row",
            |x, b| {
                if b.nrows() != 1 || b.ncols() != x.ncols() {
                    return Err(Error::shape("add_row", &dims(x), &dims(b)));
                }
                Ok(x + &b.row(0))
            },
            Op::AddRow(a.0, bias.0),
        )
    }

    pub fn scale(&self, a: Var, c: f64) -> Result<Var> {
        self.unary(a, "scale", |x| Ok((x * c, Op::Scale(a.0, c))))
    }

    pub fn add_scalar(&self, a: Var, c: f64) -> Result<Var> {
        self.unary(a, "add_scalar", |x| Ok((x + c, Op::AddScalar(a.0))))
    }

    pub fn relu(&self, a: Var) -> Result<Var> {
        self.unary(a, "relu", |x| Ok((x.mapv(|v| v.max(0.0)), Op::Relu(a.0))))
    }

    pub fn exp(&self, a: Var) -> Result<Var> {
        self.unary(a, "exp", |x| Ok((x.mapv(f64::exp), Op::Exp(a.0))))
    }

    pub fn log(&self, a: Var) -> Result<Var> {
        self.unary(a, "log", |x| Ok((x.mapv(f64::ln), Op::Log(a.0))))
    }

    pub fn transpose(&self, a: Var) -> Result<Var> {
        self.unary(a, "transpose", |x| {
            Ok((x.t().as_standard_layout().into_owned(), Op::Transpose(a.0)))
        })
    }

    fn concat(&self, parts: &[Var], axis: Axis, name: &'static str) -> Result<Var> {
        let (value, rg) = {
            let nodes = self.nodes.borrow();
            let first = parts
                .first()
                .ok_or_else(|| Error::Autograd(format!("{name} of zero tensors")))?;
            let reference = &nodes[first.0].value;
            let mut views = Vec::with_capacity(parts.len());
            for p in parts {
                let v = &nodes[p.0].value;
                let other = 1 - axis.index();
                if v.len_of(Axis(other)) != reference.len_of(Axis(other)) {
                    return Err(Error::shape(name, &dims(reference), &dims(v)));
                }
                views.push(v.view());
            }
            let value =
                ndarray::concatenate(axis, &views).map_err(|e| Error::Autograd(e.to_string()))?;
            (value, parts.iter().any(|p| nodes[p.0].requires_grad))
        };
        let ids = parts.iter().map(|p| p.0).collect();
        let op = if axis == Axis(0) {
            Op::ConcatRows(ids)
        } else {
            Op::ConcatCols(ids)
        };
        self.push(value, op, rg, name)
    }

    /// Stacks tensors vertically; all must share a column count.
    pub fn concat_rows(&self, parts: &[Var]) -> Result<Var> {
        self.concat(parts, Axis(0), "concat_rows")
    }

    /// Places tensors side by side; all must share a row count.
    pub fn concat_cols(&self, parts: &[Var]) -> Result<Var> {
        self.concat(parts, Axis(1), "concat_cols")
    }

    /// Row `i` of the output is row `index[i]` of `a`.
    pub fn gather_rows(&self, a: Var, index: &[usize]) -> Result<Var> {
        self.unary(a, "gather_rows", |x| {
            if let Some(&bad) = index.iter().find(|&&i| i >= x.nrows()) {
                return Err(Error::shape("gather_rows", &dims(x), &[bad]));
            }
            Ok((
                x.select(Axis(0), index),
                Op::GatherRows(a.0, index.to_vec()),
            ))
        })
    }

    fn check_segments(name: &'static str, x: &Matrix, seg: &[usize], n: usize) -> Result<()> {
        if seg.len() != x.nrows() {
            return Err(Error::shape(name, &dims(x), &[seg.len()]));
        }
        if let Some(&bad) = seg.iter().find(|&&s| s >= n) {
            return Err(Error::shape(name, &[n], &[bad]));
        }
        Ok(())
    }

    /// Output row `s` is the sum of the rows `i` with `seg[i] == s`.
    pub fn segment_sum(&self, a: Var, seg: &[usize], n_segments: usize) -> Result<Var> {
        self.unary(a, "segment_sum", |x| {
            Self::check_segments("segment_sum", x, seg, n_segments)?;
            let mut out = Matrix::zeros((n_segments, x.ncols()));
            for (row, &s) in x.rows().into_iter().zip(seg) {
                let mut o = out.row_mut(s);
                o += &row;
            }
            Ok((out, Op::SegmentSum(a.0, seg.to_vec())))
        })
    }

    /// Segment mean; empty segments give zero rows.
    pub fn segment_mean(&self, a: Var, seg: &[usize], n_segments: usize) -> Result<Var> {
        self.unary(a, "segment_mean", |x| {
            Self::check_segments("segment_mean", x, seg, n_segments)?;
            let mut counts = vec![0usize; n_segments];
            let mut out = Matrix::zeros((n_segments, x.ncols()));
            for (row, &s) in x.rows().into_iter().zip(seg) {
                let mut o = out.row_mut(s);
                o += &row;
                counts[s] += 1;
            }
            for (mut o, &c) in out.rows_mut().into_iter().zip(&counts) {
                if c > 0 {
                    o /= c as f64;
                }
            }
            Ok((out, Op::SegmentMean(a.0, seg.to_vec(), counts)))
        })
    }

    /// Segment max per column; empty segments give zero rows.
    pub fn segment_max(&self, a: Var, seg: &[usize], n_segments: usize) -> Result<Var> {
        self.unary(a, "segment_max", |x| {
            Self::check_segments("segment_max", x, seg, n_segments)?;
            let cols = x.ncols();
            let mut arg = Array2::from_elem((n_segments, cols), usize::MAX);
            let mut out = Matrix::zeros((n_segments, cols));
            for (i, &s) in seg.iter().enumerate() {
                for c in 0..cols {
                    let v = x[[i, c]];
                    // strict comparison keeps the first index on ties
                    if arg[[s, c]] == usize::MAX || v > out[[s, c]] {
                        arg[[s, c]] = i;
                        out[[s, c]] = v;
                    }
                }
            }
            Ok((out, Op::SegmentMax(a.0, arg)))
        })
    }

    /// Column-wise sum over all rows, `1 x c`.
    pub fn sum_rows(&self, a: Var) -> Result<Var> {
        let n = self.shape(a)[0];
        self.segment_sum(a, &vec![0; n], 1)
    }

    pub fn mean_rows(&self, a: Var) -> Result<Var> {
        let n = self.shape(a)[0];
        self.segment_mean(a, &vec![0; n], 1)
    }

    pub fn max_rows(&self, a: Var) -> Result<Var> {
        let n = self.shape(a)[0];
        self.segment_max(a, &vec![0; n], 1)
    }

    /// Scales every row to unit L2 norm.
    pub fn l2_normalize_rows(&self, a: Var, floor: NormFloor) -> Result<Var> {
        self.unary(a, "l2_normalize_rows", |x| {
            let norms: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
            let mut out = x.clone();
            for (mut row, &n) in out.rows_mut().into_iter().zip(&norms) {
                row /= denom(n, floor);
            }
            Ok((out, Op::L2Normalize(a.0, floor, norms)))
        })
    }

    /// Per-row sums, `r x 1`.
    pub fn sum_cols(&self, a: Var) -> Result<Var> {
        self.unary(a, "sum_cols", |x| {
            Ok((x.sum_axis(Axis(1)).insert_axis(Axis(1)), Op::SumCols(a.0)))
        })
    }

    pub fn sum_all(&self, a: Var) -> Result<Var> {
        self.unary(a, "sum_all", |x| {
            Ok((Matrix::from_elem((1, 1), x.sum()), Op::SumAll(a.0)))
        })
    }

    pub fn mean_all(&self, a: Var) -> Result<Var> {
        self.unary(a, "mean_all", |x| {
            if x.is_empty() {
                return Err(Error::Autograd("mean of an empty tensor".into()));
            }
            Ok((
                Matrix::from_elem((1, 1), x.sum() / x.len() as f64),
                Op::MeanAll(a.0),
            ))
        })
    }

    /// Main diagonal of a square matrix as an `n x 1` column.
    pub fn diagonal(&self, a: Var) -> Result<Var> {
        self.unary(a, "diagonal", |x| {
            if x.nrows() != x.ncols() {
                return Err(Error::shape("diagonal", &dims(x), &[x.nrows(), x.nrows()]));
            }
            Ok((x.diag().to_owned().insert_axis(Axis(1)), Op::Diagonal(a.0)))
        })
    }

    /// Cosine similarity between every row of `a` and every row of `b`.
    pub fn cosine_similarity(&self, a: Var, b: Var) -> Result<Var> {
        let [_, ca] = self.shape(a);
        let [_, cb] = self.shape(b);
        if ca != cb {
            return Err(Error::shape(
                "cosine_similarity",
                &self.shape(a),
                &self.shape(b),
            ));
        }
        let an = self.l2_normalize_rows(a, NormFloor::Clamp(1e-12))?;
        let bn = self.l2_normalize_rows(b, NormFloor::Clamp(1e-12))?;
        let bt = self.transpose(bn)?;
        self.matmul(an, bt)
    }

    /// Reverse sweep from a `1 x 1` loss. Allowed once per recording.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.backward_done.get() {
            return Err(Error::Autograd(
                "backward already ran on this tape; clear it and record again".into(),
            ));
        }
        let nodes = self.nodes.borrow();
        let shape = dims(&nodes[loss.0].value);
        if shape != [1, 1] {
            return Err(Error::Autograd(format!(
                "backward needs a scalar loss, got shape {shape:?}"
            )));
        }
        self.backward_done.set(true);

        let mut grads: Vec<Option<Matrix>> = vec![None; nodes.len()];
        grads[loss.0] = Some(Matrix::ones((1, 1)));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &nodes[i];
            if node.requires_grad {
                propagate(&nodes, node, &g, &mut grads);
            }
            grads[i] = Some(g);
        }
        for (g, n) in grads.iter_mut().zip(nodes.iter()) {
            if !n.requires_grad {
                *g = None;
            }
        }
        Ok(Gradients {
            grads,
            shapes: nodes.iter().map(|n| n.value.dim()).collect(),
        })
    }
}

fn denom(norm: f64, floor: NormFloor) -> f64 {
    match floor {
        NormFloor::Additive(eps) => norm + eps,
        NormFloor::Clamp(eps) => norm.max(eps),
    }
}

fn accumulate(grads: &mut [Option<Matrix>], nodes: &[Node], target: usize, delta: Matrix) {
    if !nodes[target].requires_grad {
        return;
    }
    match &mut grads[target] {
        Some(g) => *g += &delta,
        slot @ None => *slot = Some(delta),
    }
}

fn propagate(nodes: &[Node], node: &Node, g: &Matrix, grads: &mut [Option<Matrix>]) {
    let val = |i: usize| &nodes[i].value;
    match &node.op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            if nodes[*a].requires_grad {
                accumulate(grads, nodes, *a, g.dot(&val(*b).t()));
            }
            if nodes[*b].requires_grad {
                accumulate(grads, nodes, *b, val(*a).t().dot(g));
            }
        }
        Op::Add(a, b) => {
            accumulate(grads, nodes, *a, g.clone());
            accumulate(grads, nodes, *b, g.clone());
        }
        Op::Sub(a, b) => {
            accumulate(grads, nodes, *a, g.clone());
            accumulate(grads, nodes, *b, -g);
        }
        Op::Mul(a, b) => {
            accumulate(grads, nodes, *a, g * val(*b));
            accumulate(grads, nodes, *b, g * val(*a));
        }
        Op::Div(a, b) => {
            let (x, y) = (val(*a), val(*b));
            accumulate(grads, nodes, *a, g / y);
            let mut gb = g * x;
            Zip::from(&mut gb)
                .and(y)
                .for_each(|v, &d| *v = -*v / (d * d));
            accumulate(grads, nodes, *b, gb);
        }
        Op::AddRow(a, b) => {
            accumulate(grads, nodes, *a, g.clone());
            accumulate(grads, nodes, *b, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
        }
        Op::Scale(a, c) => accumulate(grads, nodes, *a, g * *c),
        Op::AddScalar(a) => accumulate(grads, nodes, *a, g.clone()),
        Op::Relu(a) => {
            let mut d = g.clone();
            Zip::from(&mut d).and(val(*a)).for_each(|v, &x| {
                if x <= 0.0 {
                    *v = 0.0
                }
            });
            accumulate(grads, nodes, *a, d);
        }
        Op::Exp(a) => accumulate(grads, nodes, *a, g * &node.value),
        Op::Log(a) => accumulate(grads, nodes, *a, g / val(*a)),
        Op::Transpose(a) => accumulate(grads, nodes, *a, g.t().as_standard_layout().into_owned()),
        Op::ConcatRows(parts) => {
            let mut start = 0;
            for &p in parts {
                let n = val(p).nrows();
                accumulate(
                    grads,
                    nodes,
                    p,
                    g.slice(s![start..start + n, ..]).to_owned(),
                );
                start += n;
            }
        }
        Op::ConcatCols(parts) => {
            let mut start = 0;
            for &p in parts {
                let n = val(p).ncols();
                accumulate(
                    grads,
                    nodes,
                    p,
                    g.slice(s![.., start..start + n]).to_owned(),
                );
                start += n;
            }
        }
        Op::GatherRows(a, index) => {
            let mut d = Matrix::zeros(val(*a).dim());
            for (row, &i) in g.rows().into_iter().zip(index) {
                let mut t = d.row_mut(i);
                t += &row;
            }
            accumulate(grads, nodes, *a, d);
        }
        Op::SegmentSum(a, seg) => {
            accumulate(grads, nodes, *a, g.select(Axis(0), seg));
        }
        Op::SegmentMean(a, seg, counts) => {
            let mut d = g.select(Axis(0), seg);
            for (mut row, &s) in d.rows_mut().into_iter().zip(seg) {
                row /= counts[s] as f64;
            }
            accumulate(grads, nodes, *a, d);
        }
        Op::SegmentMax(a, arg) => {
            let mut d = Matrix::zeros(val(*a).dim());
            for ((s, c), &i) in arg.indexed_iter() {
                if i != usize::MAX {
                    d[[i, c]] += g[[s, c]];
                }
            }
            accumulate(grads, nodes, *a, d);
        }
        Op::L2Normalize(a, floor, norms) => {
            let x = val(*a);
            let mut d = Matrix::zeros(x.dim());
            for (((mut out, xr), gr), &n) in d
                .rows_mut()
                .into_iter()
                .zip(x.rows())
                .zip(g.rows())
                .zip(norms)
            {
                let den = denom(n, *floor);
                out.assign(&(&gr / den));
                // d den / d x = x / n, except where the clamp holds den fixed
                let moving = n > 0.0 && !matches!(floor, NormFloor::Clamp(eps) if n < *eps);
                if moving {
                    let coeff = xr.dot(&gr) / (n * den * den);
                    out.scaled_add(-coeff, &xr);
                }
            }
            accumulate(grads, nodes, *a, d);
        }
        Op::SumCols(a) => {
            let x = val(*a);
            let d = Matrix::from_shape_fn(x.dim(), |(i, _)| g[[i, 0]]);
            accumulate(grads, nodes, *a, d);
        }
        Op::SumAll(a) => {
            accumulate(
                grads,
                nodes,
                *a,
                Matrix::from_elem(val(*a).dim(), g[[0, 0]]),
            );
        }
        Op::MeanAll(a) => {
            let x = val(*a);
            let d = Matrix::from_elem(x.dim(), g[[0, 0]] / x.len() as f64);
            accumulate(grads, nodes, *a, d);
        }
        Op::Diagonal(a) => {
            let mut d = Matrix::zeros(val(*a).dim());
            for i in 0..d.nrows() {
                d[[i, i]] = g[[i, 0]];
            }
            accumulate(grads, nodes, *a, d);
        }
    }
}

/// Outcome of a finite-difference comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// `(parameter, flat index)` of the worst coordinate.
    pub worst: (usize, usize),
    /// Analytic and central-difference values at `worst`.
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub checked: usize,
}

/// Floor added to the relative-error denominator.
pub const REL_ERROR_FLOOR: f64 = 1e-8;

/// Relative error `|a - n| / (max(|a|, |n|) + 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs().max(numeric.abs()) + REL_ERROR_FLOOR)
}

/// Compares analytic gradients of `f` at `params` against central
/// differences `(f(t + eps) - f(t - eps)) / 2 eps`, coordinate by coordinate.
///
/// `f` records its computation on the tape it is given, with `params`
/// already registered as gradient-requiring leaves, and returns the scalar
/// loss. Coordinates are evaluated in parallel; the result does not depend
/// on scheduling.
pub fn grad_check<F>(f: F, params: &[Matrix], eps: f64) -> Result<GradCheck>
where
    F: Fn(&Tape, &[Var]) -> Result<Var> + Sync,
{
    if eps <= 0.0 {
        return Err(Error::Config("grad_check epsilon must be positive".into()));
    }
    let params: Vec<Matrix> = params
        .iter()
        .map(|p| p.as_standard_layout().into_owned())
        .collect();
    let eval = |values: &[Matrix]| -> Result<f64> {
        let tape = Tape::new();
        let vars = values
            .iter()
            .map(|p| tape.leaf(p.clone(), true))
            .collect::<Result<Vec<_>>>()?;
        let loss = f(&tape, &vars)?;
        Ok(tape.scalar(loss))
    };

    let tape = Tape::new();
    let vars = params
        .iter()
        .map(|p| tape.leaf(p.clone(), true))
        .collect::<Result<Vec<_>>>()?;
    let loss = f(&tape, &vars)?;
    let grads = tape.backward(loss)?;
    let analytic: Vec<Matrix> = vars.iter().map(|&v| grads.wrt(v)).collect();

    let coords: Vec<(usize, usize)> = params
        .iter()
        .enumerate()
        .flat_map(|(p, m)| (0..m.len()).map(move |j| (p, j)))
        .collect();
    let errors = coords
        .par_iter()
        .map(|&(p, j)| {
            let mut shifted = params.clone();
            let base = params[p].as_slice().expect("standard layout")[j];
            shifted[p].as_slice_mut().expect("standard layout")[j] = base + eps;
            let plus = eval(&shifted)?;
            shifted[p].as_slice_mut().expect("standard layout")[j] = base - eps;
            let minus = eval(&shifted)?;
            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic[p].as_slice().expect("standard layout")[j];
            Ok(((p, j), a, numeric, relative_error(a, numeric)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst: (0, 0),
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        checked: coords.len(),
    };
    for &(at, a, n, e) in &errors {
        if e > report.max_rel_error {
            report.max_rel_error = e;
            report.worst = at;
            report.worst_analytic = a;
            report.worst_numeric = n;
        }
    }
    Ok(report)
}

//! GIN-style view encoders and the shared projection head.
//!
//! Each view order (0 = original, 1 = SGN¹, 2 = SGN²) has its own
//! [`ViewEncoder`]: an input projection to `hidden` followed by `K`
//! [`GinLayer`]s. A layer updates node `v` as
//!
//! ```text
//! h_v' = MLP(h_v + sum_{u in N(v)} relu(h_u + edge_map(e_uv)))
//! ```
//!
//! with `MLP = affine -> relu -> affine`. Graph vectors concatenate a pooled
//! summary of every layer, so their width is `K * hidden`. The projection
//! head (three affine maps, ReLU between, rows L2-normalized) is shared by
//! all views and only used for the contrastive objective.
//!
//! Parameter containers are generic over their storage: `Matrix` for the
//! stored model and [`Var`] for a copy bound to a [`Tape`].

use std::fs;
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{NormFloor, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, Matrix};
use crate::sgn::{view_widths, MAX_ORDER};

/// Floor added to row norms before the head output is normalized.
pub const NORM_FLOOR: f64 = 1e-12;

/// RNG stream for the projection head. View encoders use their order.
const HEAD_STREAM: u64 = 16;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Pool {
    #[default]
    Sum,
    Mean,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Affine<T = Matrix> {
    /// `in x out`
    pub weight: T,
    /// `1 x out`
    pub bias: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GinLayer<T = Matrix> {
    pub mlp_in: Affine<T>,
    pub mlp_out: Affine<T>,
    pub edge_map: Affine<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewEncoder<T = Matrix> {
    pub order: usize,
    pub input_proj: Affine<T>,
    pub layers: Vec<GinLayer<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Head<T = Matrix> {
    pub layers: [Affine<T>; 3],
}

impl<T> Affine<T> {
    fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a T)>) {
        out.push((format!("{prefix}.weight"), &self.weight));
        out.push((format!("{prefix}.bias"), &self.bias));
    }

    fn visit_mut<'a>(&'a mut self, out: &mut Vec<&'a mut T>) {
        out.push(&mut self.weight);
        out.push(&mut self.bias);
    }

    fn try_map<U>(&self, f: &mut impl FnMut(&T) -> Result<U>) -> Result<Affine<U>> {
        Ok(Affine {
            weight: f(&self.weight)?,
            bias: f(&self.bias)?,
        })
    }
}

impl<T> GinLayer<T> {
    fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a T)>) {
        self.mlp_in.visit(&format!("{prefix}.mlp_in"), out);
        self.mlp_out.visit(&format!("{prefix}.mlp_out"), out);
        self.edge_map.visit(&format!("{prefix}.edge_map"), out);
    }

    fn visit_mut<'a>(&'a mut self, out: &mut Vec<&'a mut T>) {
        self.mlp_in.visit_mut(out);
        self.mlp_out.visit_mut(out);
        self.edge_map.visit_mut(out);
    }

    fn try_map<U>(&self, f: &mut impl FnMut(&T) -> Result<U>) -> Result<GinLayer<U>> {
        Ok(GinLayer {
            mlp_in: self.mlp_in.try_map(f)?,
            mlp_out: self.mlp_out.try_map(f)?,
            edge_map: self.edge_map.try_map(f)?,
        })
    }
}

impl<T> ViewEncoder<T> {
    fn visit<'a>(&'a self, out: &mut Vec<(String, &'a T)>) {
        let prefix = format!("view{}", self.order);
        self.input_proj.visit(&format!("{prefix}.input_proj"), out);
        for (k, layer) in self.layers.iter().enumerate() {
            layer.visit(&format!("{prefix}.layer{k}"), out);
        }
    }

    fn visit_mut<'a>(&'a mut self, out: &mut Vec<&'a mut T>) {
        self.input_proj.visit_mut(out);
        for layer in &mut self.layers {
            layer.visit_mut(out);
        }
    }

    fn try_map<U>(&self, f: &mut impl FnMut(&T) -> Result<U>) -> Result<ViewEncoder<U>> {
        Ok(ViewEncoder {
            order: self.order,
            input_proj: self.input_proj.try_map(f)?,
            layers: self
                .layers
                .iter()
                .map(|l| l.try_map(f))
                .collect::<Result<_>>()?,
        })
    }
}

impl<T> Head<T> {
    fn visit<'a>(&'a self, out: &mut Vec<(String, &'a T)>) {
        for (i, a) in self.layers.iter().enumerate() {
            a.visit(&format!("head.{i}"), out);
        }
    }

    fn visit_mut<'a>(&'a mut self, out: &mut Vec<&'a mut T>) {
        for a in &mut self.layers {
            a.visit_mut(out);
        }
    }

    fn try_map<U>(&self, f: &mut impl FnMut(&T) -> Result<U>) -> Result<Head<U>> {
        let [a, b, c] = &self.layers;
        Ok(Head {
            layers: [a.try_map(f)?, b.try_map(f)?, c.try_map(f)?],
        })
    }
}

fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound);
    Matrix::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

fn affine_init(input: usize, output: usize, rng: &mut ChaCha8Rng) -> Affine {
    Affine {
        weight: glorot(input, output, rng),
        bias: Matrix::zeros((1, output)),
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Encoder architecture shared by every view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub hidden: usize,
    pub layers: usize,
    pub pool: Pool,
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.layers == 0 {
            return Err(Error::Config(
                "hidden width and layer count must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Width of graph representations and of the head's hidden layers.
    pub fn graph_width(&self) -> usize {
        self.hidden * self.layers
    }
}

/// All encoder and head parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderStack {
    pub arch: Architecture,
    /// Raw widths of the original graphs; view widths derive from these.
    pub node_width: usize,
    pub edge_width: usize,
    /// One encoder per trained view order, ascending.
    pub views: Vec<ViewEncoder>,
    pub head: Head,
}

impl EncoderStack {
    /// Seeded initialization. Each view and the head draw from their own
    /// stream, so a view's parameters do not depend on which other views exist.
    pub fn new(
        arch: Architecture,
        node_width: usize,
        edge_width: usize,
        orders: &[usize],
        seed: u64,
    ) -> Result<Self> {
        arch.validate()?;
        let mut orders = orders.to_vec();
        orders.sort_unstable();
        orders.dedup();
        if orders.first() != Some(&0) || orders.iter().any(|&o| o > MAX_ORDER) {
            return Err(Error::Config(format!(
                "view orders must include 0 and lie in 0..={MAX_ORDER}, got {orders:?}"
            )));
        }
        let h = arch.hidden;
        let views = orders
            .iter()
            .map(|&order| {
                let (d, r) = view_widths(node_width, edge_width, order);
                let mut rng = stream(seed, order as u64);
                let input_proj = affine_init(d, h, &mut rng);
                let layers = (0..arch.layers)
                    .map(|_| GinLayer {
                        mlp_in: affine_init(h, h, &mut rng),
                        mlp_out: affine_init(h, h, &mut rng),
                        edge_map: affine_init(r, h, &mut rng),
                    })
                    .collect();
                ViewEncoder {
                    order,
                    input_proj,
                    layers,
                }
            })
            .collect();
        let w = arch.graph_width();
        let mut rng = stream(seed, HEAD_STREAM);
        let head = Head {
            layers: [
                affine_init(w, w, &mut rng),
                affine_init(w, w, &mut rng),
                affine_init(w, w, &mut rng),
            ],
        };
        Ok(Self {
            arch,
            node_width,
            edge_width,
            views,
            head,
        })
    }

    pub fn orders(&self) -> Vec<usize> {
        self.views.iter().map(|v| v.order).collect()
    }

    pub fn view(&self, order: usize) -> Result<&ViewEncoder> {
        self.views
            .iter()
            .find(|v| v.order == order)
            .ok_or_else(|| Error::Config(format!("no encoder for view order {order}")))
    }

    /// Named parameters in a fixed order: views ascending, then the head.
    pub fn named_params(&self) -> Vec<(String, &Matrix)> {
        let mut out = Vec::new();
        for v in &self.views {
            v.visit(&mut out);
        }
        self.head.visit(&mut out);
        out
    }

    /// Same order as [`named_params`](Self::named_params).
    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::new();
        for v in &mut self.views {
            v.visit_mut(&mut out);
        }
        self.head.visit_mut(&mut out);
        out
    }

    pub fn param_count(&self) -> usize {
        self.named_params().iter().map(|(_, m)| m.len()).sum()
    }

    /// Registers every parameter on `tape`.
    pub fn bind(&self, tape: &Tape, trainable: bool) -> Result<BoundStack> {
        let mut leaf = |m: &Matrix| tape.leaf(m.clone(), trainable);
        let views = self
            .views
            .iter()
            .map(|v| v.try_map(&mut leaf))
            .collect::<Result<Vec<_>>>()?;
        let head = self.head.try_map(&mut leaf)?;
        Ok(BoundStack {
            arch: self.arch,
            node_width: self.node_width,
            edge_width: self.edge_width,
            views,
            head,
        })
    }

    /// Binds already-recorded variables, one per parameter in
    /// [`named_params`](Self::named_params) order.
    pub fn bind_vars(&self, tape: &Tape, vars: &[Var]) -> Result<BoundStack> {
        let expected = self.named_params();
        if vars.len() != expected.len() {
            return Err(Error::Config(format!(
                "{} variables for {} parameters",
                vars.len(),
                expected.len()
            )));
        }
        for ((name, m), &v) in expected.iter().zip(vars) {
            if tape.shape(v) != [m.nrows(), m.ncols()] {
                return Err(Error::Config(format!(
                    "parameter {name} is {:?}, variable is {:?}",
                    m.dim(),
                    tape.shape(v)
                )));
            }
        }
        let mut next = vars.iter().copied();
        let mut take = |_: &Matrix| Ok(next.next().expect("length checked"));
        let views = self
            .views
            .iter()
            .map(|v| v.try_map(&mut take))
            .collect::<Result<Vec<_>>>()?;
        let head = self.head.try_map(&mut take)?;
        Ok(BoundStack {
            arch: self.arch,
            node_width: self.node_width,
            edge_width: self.edge_width,
            views,
            head,
        })
    }

    /// Graph representations `H` (one row per graph) from the view encoder
    /// of `order`, without the projection head.
    pub fn represent(&self, order: usize, graphs: &[&AttributedGraph]) -> Result<Matrix> {
        let tape = Tape::new();
        let bound = self.bind(&tape, false)?;
        let batch = GraphBatch::new(graphs, self.node_width, self.edge_width, order)?;
        let h = bound.represent(&tape, order, &batch)?;
        Ok(tape.value(h))
    }

    /// Unit-norm projections `z` of the graphs' `order` view.
    pub fn project_graphs(&self, order: usize, graphs: &[&AttributedGraph]) -> Result<Matrix> {
        let tape = Tape::new();
        let bound = self.bind(&tape, false)?;
        let batch = GraphBatch::new(graphs, self.node_width, self.edge_width, order)?;
        let h = bound.represent(&tape, order, &batch)?;
        Ok(tape.value(bound.project(&tape, h)?))
    }

    /// Per-layer node representations `h^(1..K)` of a single graph.
    pub fn node_representations(
        &self,
        order: usize,
        graph: &AttributedGraph,
    ) -> Result<Vec<Matrix>> {
        let tape = Tape::new();
        let bound = self.bind(&tape, false)?;
        let batch = GraphBatch::new(&[graph], self.node_width, self.edge_width, order)?;
        let reps = bound.encode_nodes(&tape, order, &batch)?;
        Ok(reps.into_iter().map(|v| tape.value(v)).collect())
    }
}

/// An [`EncoderStack`] whose parameters live on a tape.
pub struct BoundStack {
    pub arch: Architecture,
    pub node_width: usize,
    pub edge_width: usize,
    pub views: Vec<ViewEncoder<Var>>,
    pub head: Head<Var>,
}

fn apply(tape: &Tape, a: &Affine<Var>, x: Var) -> Result<Var> {
    tape.add_row(tape.matmul(x, a.weight)?, a.bias)
}

impl BoundStack {
    /// Parameter variables in [`EncoderStack::named_params`] order.
    pub fn params(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for v in &self.views {
            v.visit(&mut out);
        }
        self.head.visit(&mut out);
        out.into_iter().map(|(_, v)| *v).collect()
    }

    fn view(&self, order: usize) -> Result<&ViewEncoder<Var>> {
        self.views
            .iter()
            .find(|v| v.order == order)
            .ok_or_else(|| Error::Config(format!("no encoder for view order {order}")))
    }

    /// Node representations after each of the `K` layers.
    pub fn encode_nodes(&self, tape: &Tape, order: usize, batch: &GraphBatch) -> Result<Vec<Var>> {
        if batch.order != order {
            return Err(Error::Config(format!(
                "batch holds order {} views, encoder order {order} requested",
                batch.order
            )));
        }
        let enc = self.view(order)?;
        let x = tape.constant(batch.node_attrs.clone())?;
        let e = tape.constant(batch.message_attrs.clone())?;
        let mut h = apply(tape, &enc.input_proj, x)?;
        let mut reps = Vec::with_capacity(enc.layers.len());
        for layer in &enc.layers {
            let from = tape.gather_rows(h, &batch.source)?;
            let edge = apply(tape, &layer.edge_map, e)?;
            let msg = tape.relu(tape.add(from, edge)?)?;
            let agg = tape.segment_sum(msg, &batch.target, batch.n_nodes())?;
            let pre = tape.add(h, agg)?;
            let mid = tape.relu(apply(tape, &layer.mlp_in, pre)?)?;
            h = apply(tape, &layer.mlp_out, mid)?;
            reps.push(h);
        }
        Ok(reps)
    }

    /// Pools each layer per graph and concatenates: `graphs x (K * hidden)`.
    pub fn readout(&self, tape: &Tape, reps: &[Var], batch: &GraphBatch) -> Result<Var> {
        if reps.is_empty() {
            return Err(Error::Config("readout needs at least one layer".into()));
        }
        let pooled = reps
            .iter()
            .map(|&h| match self.arch.pool {
                Pool::Sum => tape.segment_sum(h, &batch.node_graph, batch.n_graphs),
                Pool::Mean => tape.segment_mean(h, &batch.node_graph, batch.n_graphs),
                Pool::Max => tape.segment_max(h, &batch.node_graph, batch.n_graphs),
            })
            .collect::<Result<Vec<_>>>()?;
        tape.concat_cols(&pooled)
    }

    pub fn represent(&self, tape: &Tape, order: usize, batch: &GraphBatch) -> Result<Var> {
        let reps = self.encode_nodes(tape, order, batch)?;
        self.readout(tape, &reps, batch)
    }

    /// Head output, rows normalized as `x / (|x| + 1e-12)`.
    pub fn project(&self, tape: &Tape, h: Var) -> Result<Var> {
        let [a, b, c] = &self.head.layers;
        let x = tape.relu(apply(tape, a, h)?)?;
        let x = tape.relu(apply(tape, b, x)?)?;
        let x = apply(tape, c, x)?;
        tape.l2_normalize_rows(x, NormFloor::Additive(NORM_FLOOR))
    }

    /// `z` for every graph of the batch.
    pub fn embed(&self, tape: &Tape, batch: &GraphBatch) -> Result<Var> {
        let h = self.represent(tape, batch.order, batch)?;
        self.project(tape, h)
    }
}

/// Several graphs packed as one disjoint union, with messages in both
/// directions of every edge.
#[derive(Debug, Clone)]
pub struct GraphBatch {
    pub order: usize,
    pub n_graphs: usize,
    pub node_attrs: Matrix,
    /// Attribute row of every message, aligned with `source`/`target`.
    pub message_attrs: Matrix,
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    /// Graph index of every node.
    pub node_graph: Vec<usize>,
}

impl GraphBatch {
    /// Packs graphs that are all views of `order`, checking their widths
    /// against those implied by the original widths `(d0, r0)`.
    pub fn new(graphs: &[&AttributedGraph], d0: usize, r0: usize, order: usize) -> Result<Self> {
        let (d, r) = view_widths(d0, r0, order);
        let mut node_rows = 0;
        let mut edge_rows = 0;
        for g in graphs {
            if g.node_width() != d {
                return Err(Error::WidthMismatch {
                    order,
                    what: "node attribute",
                    expected: d,
                    found: g.node_width(),
                });
            }
            if g.edge_width() != r {
                return Err(Error::WidthMismatch {
                    order,
                    what: "edge attribute",
                    expected: r,
                    found: g.edge_width(),
                });
            }
            node_rows += g.n_nodes();
            edge_rows += g.n_edges();
        }

        let mut node_attrs = Matrix::zeros((node_rows, d));
        let mut message_attrs = Matrix::zeros((2 * edge_rows, r));
        let mut source = Vec::with_capacity(2 * edge_rows);
        let mut target = Vec::with_capacity(2 * edge_rows);
        let mut node_graph = Vec::with_capacity(node_rows);
        let mut offset = 0;
        for (gi, g) in graphs.iter().enumerate() {
            node_attrs
                .slice_mut(ndarray::s![offset..offset + g.n_nodes(), ..])
                .assign(g.node_attrs());
            for (k, &(a, b)) in g.edges().iter().enumerate() {
                let row = g.edge_attrs().row(k);
                for (u, v) in [(a, b), (b, a)] {
                    message_attrs.row_mut(source.len()).assign(&row);
                    source.push(offset + u);
                    target.push(offset + v);
                }
            }
            node_graph.extend(std::iter::repeat_n(gi, g.n_nodes()));
            offset += g.n_nodes();
        }
        Ok(Self {
            order,
            n_graphs: graphs.len(),
            node_attrs,
            message_attrs,
            source,
            target,
            node_graph,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_graph.len()
    }
}

#[derive(Serialize, Deserialize)]
struct StoredTensor {
    name: String,
    shape: [usize; 2],
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct StoredCheckpoint<C> {
    format: String,
    version: u32,
    config: C,
    arch: Architecture,
    node_width: usize,
    edge_width: usize,
    orders: Vec<usize>,
    params: Vec<StoredTensor>,
}

const CHECKPOINT_FORMAT: &str = "sgncl-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

/// Writes parameters, shapes, view orders and `config` as JSON.
pub fn save_checkpoint<C: Serialize>(
    stack: &EncoderStack,
    config: &C,
    path: impl AsRef<Path>,
) -> Result<()> {
    let stored = StoredCheckpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        config,
        arch: stack.arch,
        node_width: stack.node_width,
        edge_width: stack.edge_width,
        orders: stack.orders(),
        params: stack
            .named_params()
            .into_iter()
            .map(|(name, m)| StoredTensor {
                name,
                shape: [m.nrows(), m.ncols()],
                data: m.iter().copied().collect(),
            })
            .collect(),
    };
    let text = serde_json::to_string(&stored).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

/// Reads a checkpoint and checks it against the original widths of the
/// dataset it will be applied to.
pub fn load_checkpoint<C: for<'de> Deserialize<'de>>(
    path: impl AsRef<Path>,
    node_width: usize,
    edge_width: usize,
) -> Result<(EncoderStack, C)> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)?;
    let stored: StoredCheckpoint<C> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    if stored.format != CHECKPOINT_FORMAT || stored.version != CHECKPOINT_VERSION {
        return Err(Error::Config(format!(
            "unsupported checkpoint {} v{}",
            stored.format, stored.version
        )));
    }
    for &order in &stored.orders {
        let expect = view_widths(node_width, edge_width, order);
        let found = view_widths(stored.node_width, stored.edge_width, order);
        if expect.0 != found.0 {
            return Err(Error::WidthMismatch {
                order,
                what: "node attribute",
                expected: found.0,
                found: expect.0,
            });
        }
        if expect.1 != found.1 {
            return Err(Error::WidthMismatch {
                order,
                what: "edge attribute",
                expected: found.1,
                found: expect.1,
            });
        }
    }

    let mut stack = EncoderStack::new(
        stored.arch,
        stored.node_width,
        stored.edge_width,
        &stored.orders,
        0,
    )?;
    let names: Vec<(String, [usize; 2])> = stack
        .named_params()
        .into_iter()
        .map(|(n, m)| (n, [m.nrows(), m.ncols()]))
        .collect();
    if names.len() != stored.params.len() {
        return Err(Error::Config(format!(
            "checkpoint has {} tensors, architecture needs {}",
            stored.params.len(),
            names.len()
        )));
    }
    for ((slot, (name, shape)), t) in stack.params_mut().into_iter().zip(names).zip(stored.params) {
        if t.name != name || t.shape != shape || t.data.len() != shape[0] * shape[1] {
            return Err(Error::Config(format!(
                "checkpoint tensor {} {:?} does not match expected {name} {shape:?}",
                t.name, t.shape
            )));
        }
        *slot = Matrix::from_shape_vec((shape[0], shape[1]), t.data)
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok((stack, stored.config))
}

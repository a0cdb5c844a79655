//! Subgraph-network augmentation: the line-graph topology and the attributed
//! Edge-to-Node mapping, iterated to first and second order.
//!
//! For an input view with node widths `d` and edge widths `r`, one
//! application produces a view whose node `k` stands for input edge
//! `e_k = (v_i, v_j)`, `i < j`, carrying `[x_i | x_j]`, and whose edge for
//! the open triangle `(e_a, v_c, e_b)`, `a < b`, carries `[u_a | x_c | u_b]`.
//! Widths therefore grow as `d' = 2d` and `r' = 2r + d`.

use ndarray::{s, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{open_triangles, AttributedGraph, Matrix};

/// Highest order the augmentation produces.
pub const MAX_ORDER: usize = 2;

/// An augmented view: the graph after `order` Edge-to-Node applications to
/// dataset graph `origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnView {
    pub graph: AttributedGraph,
    pub order: usize,
    pub origin: usize,
}

impl SgnView {
    pub fn original(graph: AttributedGraph, origin: usize) -> Self {
        Self {
            graph,
            order: 0,
            origin,
        }
    }
}

/// Ceiling on augmented-view sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeGuard {
    pub max_nodes: usize,
    pub max_edges: usize,
}

impl Default for SizeGuard {
    fn default() -> Self {
        Self {
            max_nodes: 20_000,
            max_edges: 200_000,
        }
    }
}

impl SizeGuard {
    pub fn new(max_nodes: usize, max_edges: usize) -> Result<Self> {
        let guard = Self {
            max_nodes,
            max_edges,
        };
        guard.validate()?;
        Ok(guard)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_nodes == 0 || self.max_edges == 0 {
            return Err(Error::Config("size guard limits must be positive".into()));
        }
        Ok(())
    }

    fn check(&self, origin: usize, order: usize, nodes: usize, edges: usize) -> Result<()> {
        if nodes > self.max_nodes {
            return Err(Error::GuardExceeded {
                origin,
                order,
                what: "nodes",
                count: nodes,
                limit: self.max_nodes,
            });
        }
        if edges > self.max_edges {
            return Err(Error::GuardExceeded {
                origin,
                order,
                what: "edges",
                count: edges,
                limit: self.max_edges,
            });
        }
        Ok(())
    }
}

/// Attribute widths `(d, r)` of a view of `order` built from originals with
/// widths `(d0, r0)`.
pub fn view_widths(d0: usize, r0: usize, order: usize) -> (usize, usize) {
    (0..order).fold((d0, r0), |(d, r), _| (2 * d, 2 * r + d))
}

/// Line graph topology: node `i` is edge `e_i`, nodes adjacent iff their
/// edges share an endpoint. Attributes are empty.
pub fn line_graph(graph: &AttributedGraph) -> AttributedGraph {
    let edges = open_triangles(graph)
        .into_iter()
        .map(|t| (t.edge_a, t.edge_b))
        .collect::<Vec<_>>();
    let n = graph.n_edges();
    let m = edges.len();
    AttributedGraph::from_canonical_parts(n, edges, Matrix::zeros((n, 0)), Matrix::zeros((m, 0)))
}

/// One attributed Edge-to-Node application.
pub fn edge_to_node(view: &SgnView) -> Result<SgnView> {
    let g = &view.graph;
    let d = g.node_width();
    let r = g.edge_width();
    let triangles = open_triangles(g);
    if d == 0 && !triangles.is_empty() {
        return Err(Error::MissingNodeAttributes {
            origin: view.origin,
            order: view.order,
            triangles: triangles.len(),
        });
    }

    let x = g.node_attrs();
    let u = g.edge_attrs();

    let mut node_attrs = Matrix::zeros((g.n_edges(), 2 * d));
    for (k, &(i, j)) in g.edges().iter().enumerate() {
        let mut row = node_attrs.row_mut(k);
        row.slice_mut(s![..d]).assign(&x.row(i));
        row.slice_mut(s![d..]).assign(&x.row(j));
    }

    let mut edge_attrs = Matrix::zeros((triangles.len(), 2 * r + d));
    let mut edges = Vec::with_capacity(triangles.len());
    for (k, t) in triangles.iter().enumerate() {
        let mut row = edge_attrs.row_mut(k);
        row.slice_mut(s![..r]).assign(&u.row(t.edge_a));
        row.slice_mut(s![r..r + d]).assign(&x.row(t.center));
        row.slice_mut(s![r + d..]).assign(&u.row(t.edge_b));
        edges.push((t.edge_a, t.edge_b));
    }

    Ok(SgnView {
        graph: AttributedGraph::from_canonical_parts(g.n_edges(), edges, node_attrs, edge_attrs),
        order: view.order + 1,
        origin: view.origin,
    })
}

/// Applies Edge-to-Node `target_order` times to an original view.
///
/// Each step's size is predicted from the input (`|V'| = |E|`,
/// `|E'| = sum_v C(deg v, 2)`) and checked against `guard` before anything is
/// materialised.
pub fn sgn(view: &SgnView, target_order: usize, guard: &SizeGuard) -> Result<SgnView> {
    if !(1..=MAX_ORDER).contains(&target_order) {
        return Err(Error::Config(format!(
            "SGN order must be 1 or 2, got {target_order}"
        )));
    }
    if view.order != 0 {
        return Err(Error::Config(format!(
            "SGN expects an original view, got order {}",
            view.order
        )));
    }
    let mut current = view.clone();
    for step in 1..=target_order {
        let g = &current.graph;
        guard.check(view.origin, step, g.n_edges(), g.open_triangle_count())?;
        current = edge_to_node(&current)?;
    }
    Ok(current)
}

/// Builds `order`-th views for every graph in parallel. Output order follows
/// input order; per-graph failures are reported in place.
pub fn augment_all(
    graphs: &[AttributedGraph],
    order: usize,
    guard: &SizeGuard,
) -> Vec<Result<SgnView>> {
    use rayon::prelude::*;
    graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| sgn(&SgnView::original(g.clone(), i), order, guard))
        .collect()
}

/// Node-row view of a matrix, mostly for tests and examples.
pub fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.axis_iter(Axis(0)).map(|r| r.to_vec()).collect()
}

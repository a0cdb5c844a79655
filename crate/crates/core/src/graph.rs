//! Attributed undirected simple graphs and the combinatorial primitives the
//! augmentation builds on.
//!
//! Edges are stored once as `(u, v)` with `u < v`, sorted in dictionary
//! order. The position of an edge in that order is its identity everywhere
//! else in the crate: edge `i` becomes node `i` of the line graph.

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// Dense row-major attribute matrix.
pub type Matrix = Array2<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct AttributedGraph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    node_attrs: Matrix,
    edge_attrs: Matrix,
}

/// Two distinct edges sharing the node `center`; `edge_a < edge_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpenTriangle {
    pub edge_a: usize,
    pub center: usize,
    pub edge_b: usize,
}

impl AttributedGraph {
    /// Builds a graph from edges in any order and orientation.
    ///
    /// `edge_attrs` rows follow the order of `edges` as given; they are moved
    /// along when the edges are put into canonical order. Self-loops and
    /// duplicate edges are rejected here; lenient ingestion lives in the
    /// dataset loader.
    pub fn new(
        n_nodes: usize,
        edges: Vec<(usize, usize)>,
        node_attrs: Matrix,
        edge_attrs: Matrix,
    ) -> Result<Self> {
        if node_attrs.nrows() != n_nodes {
            return Err(Error::InvalidGraph(format!(
                "node_attrs has {} rows for {} nodes",
                node_attrs.nrows(),
                n_nodes
            )));
        }
        if edge_attrs.nrows() != edges.len() {
            return Err(Error::InvalidGraph(format!(
                "edge_attrs has {} rows for {} edges",
                edge_attrs.nrows(),
                edges.len()
            )));
        }
        if !node_attrs
            .iter()
            .chain(edge_attrs.iter())
            .all(|x| x.is_finite())
        {
            return Err(Error::InvalidGraph("non-finite attribute".into()));
        }
        let mut keyed = Vec::with_capacity(edges.len());
        for (row, &(a, b)) in edges.iter().enumerate() {
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a},{b}) references a node outside 0..{n_nodes}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            keyed.push(((a.min(b), a.max(b)), row));
        }
        keyed.sort_unstable();
        if let Some(w) = keyed.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidGraph(format!("duplicate edge {:?}", w[0].0)));
        }
        let order: Vec<usize> = keyed.iter().map(|&(_, row)| row).collect();
        let edges = keyed.into_iter().map(|(e, _)| e).collect();
        let edge_attrs = edge_attrs.select(Axis(0), &order);
        Ok(Self {
            n_nodes,
            edges,
            node_attrs,
            edge_attrs,
        })
    }

    /// Topology-only graph with zero-width attribute matrices.
    pub fn from_edges(n_nodes: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let m = edges.len();
        Self::new(
            n_nodes,
            edges,
            Matrix::zeros((n_nodes, 0)),
            Matrix::zeros((m, 0)),
        )
    }

    pub(crate) fn from_canonical_parts(
        n_nodes: usize,
        edges: Vec<(usize, usize)>,
        node_attrs: Matrix,
        edge_attrs: Matrix,
    ) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(edges.iter().all(|&(u, v)| u < v && v < n_nodes));
        debug_assert_eq!(node_attrs.nrows(), n_nodes);
        debug_assert_eq!(edge_attrs.nrows(), edges.len());
        Self {
            n_nodes,
            edges,
            node_attrs,
            edge_attrs,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_attrs(&self) -> &Matrix {
        &self.node_attrs
    }

    pub fn edge_attrs(&self) -> &Matrix {
        &self.edge_attrs
    }

    /// Node attribute width `d`.
    pub fn node_width(&self) -> usize {
        self.node_attrs.ncols()
    }

    /// Edge attribute width `r`.
    pub fn edge_width(&self) -> usize {
        self.edge_attrs.ncols()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_nodes];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Incident edge indices per node, ascending.
    pub fn incident_edges(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n_nodes];
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            inc[u].push(i);
            inc[v].push(i);
        }
        inc
    }

    /// Number of open triangles, `sum_v C(deg(v), 2)`.
    pub fn open_triangle_count(&self) -> usize {
        self.degrees()
            .iter()
            .map(|&d| d * d.saturating_sub(1) / 2)
            .sum()
    }

    pub fn with_node_attrs(&self, node_attrs: Matrix) -> Result<Self> {
        if node_attrs.nrows() != self.n_nodes {
            return Err(Error::InvalidGraph(format!(
                "node_attrs has {} rows for {} nodes",
                node_attrs.nrows(),
                self.n_nodes
            )));
        }
        Ok(Self {
            node_attrs,
            ..self.clone()
        })
    }

    pub fn with_edge_attrs(&self, edge_attrs: Matrix) -> Result<Self> {
        if edge_attrs.nrows() != self.edges.len() {
            return Err(Error::InvalidGraph(format!(
                "edge_attrs has {} rows for {} edges",
                edge_attrs.nrows(),
                self.edges.len()
            )));
        }
        Ok(Self {
            edge_attrs,
            ..self.clone()
        })
    }
}

/// Edge index to endpoint binding in dictionary order of `(u, v)`.
///
/// Graphs are kept canonical on construction, so this is the stored edge
/// list; index `i` of the result is the relabeled edge `e_i`.
pub fn canonical_edges(graph: &AttributedGraph) -> Vec<(usize, usize)> {
    graph.edges.clone()
}

/// Orients every pair as `(min, max)`, sorts, and removes duplicates.
/// Self-loops are kept out.
pub fn canonicalize_edge_list<I>(edges: I) -> Vec<(usize, usize)>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut out: Vec<_> = edges
        .into_iter()
        .filter(|(u, v)| u != v)
        .map(|(u, v)| (u.min(v), u.max(v)))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Every unordered pair of distinct edges sharing a node, ordered by
/// `(edge_a, edge_b)`.
pub fn open_triangles(graph: &AttributedGraph) -> Vec<OpenTriangle> {
    let mut out = Vec::with_capacity(graph.open_triangle_count());
    for (center, inc) in graph.incident_edges().iter().enumerate() {
        for (i, &a) in inc.iter().enumerate() {
            for &b in &inc[i + 1..] {
                out.push(OpenTriangle {
                    edge_a: a,
                    center,
                    edge_b: b,
                });
            }
        }
    }
    // two distinct edges of a simple graph share at most one node
    out.sort_unstable_by_key(|t| (t.edge_a, t.edge_b));
    out
}

/// Relabels node `i` as `perm[i]`, moving attribute rows along, and restores
/// canonical edge order.
pub fn permute_nodes(graph: &AttributedGraph, perm: &[usize]) -> Result<AttributedGraph> {
    let n = graph.n_nodes;
    if perm.len() != n {
        return Err(Error::NotBijection { n });
    }
    let mut inverse = vec![usize::MAX; n];
    for (i, &p) in perm.iter().enumerate() {
        if p >= n || inverse[p] != usize::MAX {
            return Err(Error::NotBijection { n });
        }
        inverse[p] = i;
    }
    let node_attrs = graph.node_attrs.select(Axis(0), &inverse);
    let edges = graph
        .edges
        .iter()
        .map(|&(u, v)| (perm[u], perm[v]))
        .collect();
    AttributedGraph::new(n, edges, node_attrs, graph.edge_attrs.clone())
}

/// Places the graphs side by side, offsetting node ids. All inputs must share
/// attribute widths.
pub fn disjoint_union(graphs: &[&AttributedGraph]) -> Result<AttributedGraph> {
    let (d, r) = graphs
        .first()
        .map(|g| (g.node_width(), g.edge_width()))
        .unwrap_or((0, 0));
    let mut edges = Vec::new();
    let mut node_rows = Vec::new();
    let mut edge_rows = Vec::new();
    let mut offset = 0;
    for g in graphs {
        if g.node_width() != d || g.edge_width() != r {
            return Err(Error::InvalidGraph(
                "disjoint union of graphs with different attribute widths".into(),
            ));
        }
        edges.extend(g.edges.iter().map(|&(u, v)| (u + offset, v + offset)));
        node_rows.push(g.node_attrs.view());
        edge_rows.push(g.edge_attrs.view());
        offset += g.n_nodes;
    }
    let node_attrs = if node_rows.is_empty() {
        Matrix::zeros((0, d))
    } else {
        ndarray::concatenate(Axis(0), &node_rows).expect("equal widths")
    };
    let edge_attrs = if edge_rows.is_empty() {
        Matrix::zeros((0, r))
    } else {
        ndarray::concatenate(Axis(0), &edge_rows).expect("equal widths")
    };
    AttributedGraph::new(offset, edges, node_attrs, edge_attrs)
}

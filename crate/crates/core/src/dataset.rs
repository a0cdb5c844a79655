//! TU-format corpus loading, degree featurization, summary statistics, and
//! the line-delimited interchange format for augmented views.
//!
//! # Interchange format
//!
//! UTF-8 JSON Lines. The first line is a header object
//!
//! ```text
//! {"format":"sgncl-graphs","version":1,"name":"MUTAG","class_count":2,"graphs":188}
//! ```
//!
//! followed by exactly `graphs` record lines, one per graph, in dataset order:
//!
//! ```text
//! {"n":3,"edges":[[0,1],[1,2]],"node_width":1,"edge_width":1,
//!  "node_attrs":[1.0,2.0,3.0],"edge_attrs":[10.0,20.0],"label":0,"order":0,"origin":0}
//! ```
//!
//! `edges` are canonical `(u, v)` pairs with `u < v` in dictionary order;
//! `node_attrs` (`n * node_width` values) and `edge_attrs`
//! (`len(edges) * edge_width` values) are row-major. Floats are written in
//! shortest round-trip form, so a write/read cycle is bit-exact. Blank lines
//! are not permitted; a missing or partial record is a parse error.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, Matrix};
use crate::sgn::SgnView;

/// Where a dataset entry came from: augmentation order and source graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewTag {
    pub order: usize,
    pub origin: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    pub name: String,
    pub graphs: Vec<AttributedGraph>,
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub tags: Vec<ViewTag>,
}

impl GraphDataset {
    /// Dataset of original graphs (order 0, origin = position).
    pub fn new(
        name: impl Into<String>,
        graphs: Vec<AttributedGraph>,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self> {
        let tags = (0..graphs.len())
            .map(|i| ViewTag {
                order: 0,
                origin: i,
            })
            .collect();
        Self::with_tags(name, graphs, labels, class_count, tags)
    }

    pub fn with_tags(
        name: impl Into<String>,
        graphs: Vec<AttributedGraph>,
        labels: Vec<usize>,
        class_count: usize,
        tags: Vec<ViewTag>,
    ) -> Result<Self> {
        if labels.len() != graphs.len() || tags.len() != graphs.len() {
            return Err(Error::InvalidGraph(format!(
                "{} graphs but {} labels and {} tags",
                graphs.len(),
                labels.len(),
                tags.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::InvalidGraph(format!(
                "label {bad} outside 0..{class_count}"
            )));
        }
        Ok(Self {
            name: name.into(),
            graphs,
            labels,
            class_count,
            tags,
        })
    }

    /// Views built from this dataset, keeping labels and recording tags.
    pub fn from_views(&self, views: Vec<SgnView>) -> Result<Self> {
        let labels = views.iter().map(|v| self.labels[v.origin]).collect();
        let tags = views
            .iter()
            .map(|v| ViewTag {
                order: v.order,
                origin: v.origin,
            })
            .collect();
        let graphs = views.into_iter().map(|v| v.graph).collect();
        Self::with_tags(self.name.clone(), graphs, labels, self.class_count, tags)
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// `(node_width, edge_width)` shared by every graph, or an error naming
    /// the first graph that disagrees.
    pub fn widths(&self) -> Result<(usize, usize)> {
        let first = self.graphs.first().ok_or(Error::EmptyDataset)?;
        let w = (first.node_width(), first.edge_width());
        for (i, g) in self.graphs.iter().enumerate() {
            if (g.node_width(), g.edge_width()) != w {
                return Err(Error::InvalidGraph(format!(
                    "graph {i} has widths ({}, {}), expected {w:?}",
                    g.node_width(),
                    g.edge_width()
                )));
            }
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetStats {
    pub graph_count: usize,
    pub class_count: usize,
    pub avg_nodes: f64,
    pub avg_edges: f64,
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} graphs, {} classes, avg nodes {:.2}, avg edges {:.2}",
            self.graph_count, self.class_count, self.avg_nodes, self.avg_edges
        )
    }
}

pub fn stats(dataset: &GraphDataset) -> Result<DatasetStats> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = dataset.len() as f64;
    let nodes: usize = dataset.graphs.iter().map(|g| g.n_nodes()).sum();
    let edges: usize = dataset.graphs.iter().map(|g| g.n_edges()).sum();
    Ok(DatasetStats {
        graph_count: dataset.len(),
        class_count: dataset.class_count,
        avg_nodes: nodes as f64 / n,
        avg_edges: edges as f64 / n,
    })
}

struct Lines {
    path: PathBuf,
    lines: Vec<(usize, String)>,
}

impl Lines {
    fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let mut lines = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if !line.trim().is_empty() {
                lines.push((i + 1, line));
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            lines,
        })
    }

    fn optional(path: &Path) -> Result<Option<Self>> {
        if path.exists() {
            Self::read(path).map(Some)
        } else {
            Ok(None)
        }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            file: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn ints(&self) -> Result<Vec<(usize, Vec<i64>)>> {
        self.lines
            .iter()
            .map(|(no, l)| {
                let v = l
                    .split(',')
                    .map(|t| t.trim().parse::<i64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| self.err(*no, format!("expected integers: {e}")))?;
                Ok((*no, v))
            })
            .collect()
    }

    fn floats(&self) -> Result<Vec<(usize, Vec<f64>)>> {
        self.lines
            .iter()
            .map(|(no, l)| {
                let v = l
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| self.err(*no, format!("expected numbers: {e}")))?;
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(self.err(*no, "non-finite attribute"));
                }
                Ok((*no, v))
            })
            .collect()
    }

    /// One integer per line, with the count checked against `expected`.
    fn column(&self, expected: usize, what: &str) -> Result<Vec<i64>> {
        let rows = self.ints()?;
        if rows.len() != expected {
            let line = rows.last().map(|r| r.0).unwrap_or(0);
            return Err(self.err(
                line,
                format!("expected {expected} {what} lines, found {}", rows.len()),
            ));
        }
        rows.into_iter()
            .map(|(no, v)| match v.as_slice() {
                [x] => Ok(*x),
                _ => Err(self.err(no, "expected a single value")),
            })
            .collect()
    }

    fn matrix(&self, expected: usize, what: &str) -> Result<Matrix> {
        let rows = self.floats()?;
        if rows.len() != expected {
            let line = rows.last().map(|r| r.0).unwrap_or(0);
            return Err(self.err(
                line,
                format!("expected {expected} {what} lines, found {}", rows.len()),
            ));
        }
        let width = rows.first().map(|r| r.1.len()).unwrap_or(0);
        let mut m = Matrix::zeros((expected, width));
        for (i, (no, v)) in rows.iter().enumerate() {
            if v.len() != width {
                return Err(self.err(*no, format!("expected {width} values, found {}", v.len())));
            }
            m.row_mut(i)
                .assign(&ndarray::ArrayView1::from(v.as_slice()));
        }
        Ok(m)
    }
}

/// One-hot encodes categorical values; columns are the sorted distinct values.
fn one_hot(values: &[i64]) -> Matrix {
    let cats: BTreeMap<i64, usize> = values
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    let mut m = Matrix::zeros((values.len(), cats.len()));
    for (i, v) in values.iter().enumerate() {
        m[[i, cats[v]]] = 1.0;
    }
    m
}

fn hstack(parts: &[Matrix], rows: usize) -> Matrix {
    if parts.is_empty() {
        return Matrix::zeros((rows, 0));
    }
    let views: Vec<_> = parts.iter().map(|m| m.view()).collect();
    ndarray::concatenate(Axis(1), &views).expect("row counts agree")
}

/// Loads `name` from a TU-format directory.
///
/// `directory` may hold the `name_*.txt` files directly or a `name/`
/// subdirectory with them. Node ids are 1-based in the files and become
/// 0-based, compacted per graph in file order. Directed duplicates collapse
/// to one undirected edge (first occurrence supplies edge labels and
/// attributes); self-loops are dropped with a warning. Categorical labels are
/// one-hot encoded and placed before any continuous attributes.
pub fn load_tud(directory: impl AsRef<Path>, name: &str) -> Result<GraphDataset> {
    let mut dir = directory.as_ref().to_path_buf();
    if !dir.join(format!("{name}_A.txt")).exists() && dir.join(name).is_dir() {
        dir = dir.join(name);
    }
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));

    let indicator_src = Lines::read(&file("graph_indicator"))?;
    let adjacency = Lines::read(&file("A"))?;

    let indicator_rows = indicator_src.ints()?;
    let n_total = indicator_rows.len();
    let mut indicator = Vec::with_capacity(n_total);
    for (no, v) in &indicator_rows {
        match v.as_slice() {
            [g] => indicator.push(*g),
            _ => return Err(indicator_src.err(*no, "expected a single graph id")),
        }
    }
    let graph_ids: BTreeMap<i64, usize> = indicator
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, g)| (g, i))
        .collect();
    let n_graphs = graph_ids.len();

    // global node -> (graph, local id)
    let mut sizes = vec![0usize; n_graphs];
    let mut local = Vec::with_capacity(n_total);
    for g in &indicator {
        let gi = graph_ids[g];
        local.push((gi, sizes[gi]));
        sizes[gi] += 1;
    }

    let mut node_parts = Vec::new();
    if let Some(src) = Lines::optional(&file("node_labels"))? {
        node_parts.push(one_hot(&src.column(n_total, "node label")?));
    }
    if let Some(src) = Lines::optional(&file("node_attributes"))? {
        node_parts.push(src.matrix(n_total, "node attribute")?);
    }
    let node_matrix = hstack(&node_parts, n_total);

    let adj_rows = adjacency.ints()?;
    let n_lines = adj_rows.len();
    let mut edge_parts = Vec::new();
    if let Some(src) = Lines::optional(&file("edge_labels"))? {
        edge_parts.push(one_hot(&src.column(n_lines, "edge label")?));
    }
    if let Some(src) = Lines::optional(&file("edge_attributes"))? {
        edge_parts.push(src.matrix(n_lines, "edge attribute")?);
    }
    let edge_matrix = hstack(&edge_parts, n_lines);

    // per graph: canonical (u, v) -> source line index
    let mut graph_edges: Vec<BTreeMap<(usize, usize), usize>> = vec![BTreeMap::new(); n_graphs];
    let mut self_loops = 0usize;
    for (idx, (no, v)) in adj_rows.iter().enumerate() {
        let (a, b) = match v.as_slice() {
            [a, b] => (*a, *b),
            _ => return Err(adjacency.err(*no, "expected a node pair")),
        };
        let resolve = |id: i64| -> Result<(usize, usize)> {
            if id < 1 || id as usize > n_total {
                return Err(adjacency.err(*no, format!("node {id} is not in 1..={n_total}")));
            }
            Ok(local[id as usize - 1])
        };
        let (ga, la) = resolve(a)?;
        let (gb, lb) = resolve(b)?;
        if ga != gb {
            return Err(adjacency.err(*no, format!("edge ({a},{b}) joins two different graphs")));
        }
        if la == lb {
            self_loops += 1;
            continue;
        }
        graph_edges[ga]
            .entry((la.min(lb), la.max(lb)))
            .or_insert(idx);
    }
    if self_loops > 0 {
        log::warn!("{name}: dropped {self_loops} self-loop lines");
    }

    let labels_raw = match Lines::optional(&file("graph_labels"))? {
        Some(src) => src.column(n_graphs, "graph label")?,
        None => vec![0; n_graphs],
    };
    let label_ids: BTreeMap<i64, usize> = labels_raw
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i))
        .collect();
    let labels: Vec<usize> = labels_raw.iter().map(|l| label_ids[l]).collect();

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_graphs];
    for (node, &(g, _)) in local.iter().enumerate() {
        members[g].push(node);
    }
    let mut graphs = Vec::with_capacity(n_graphs);
    for (g, edges) in graph_edges.into_iter().enumerate() {
        let node_attrs = node_matrix.select(Axis(0), &members[g]);
        let lines: Vec<usize> = edges.values().copied().collect();
        let edge_attrs = edge_matrix.select(Axis(0), &lines);
        let pairs = edges.into_keys().collect();
        graphs.push(AttributedGraph::new(
            sizes[g], pairs, node_attrs, edge_attrs,
        )?);
    }
    GraphDataset::new(name, graphs, labels, label_ids.len().max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegreeMode {
    /// Append the degree one-hot after existing node attributes.
    #[default]
    Append,
    /// Use the degree one-hot as the only node attributes.
    Replace,
}

/// Default degree clipping for attribute-free social-network corpora.
pub const DEFAULT_MAX_DEGREE: usize = 64;

/// Adds one-hot `min(degree, max_degree)` node attributes (width
/// `max_degree + 1`, bucket 0 for isolated nodes) and a constant width-1
/// column of ones as edge attributes when a graph has none.
pub fn degree_featurize(
    dataset: &GraphDataset,
    max_degree: usize,
    mode: DegreeMode,
) -> Result<GraphDataset> {
    if max_degree < 1 {
        return Err(Error::Config("max_degree must be at least 1".into()));
    }
    let graphs = dataset
        .graphs
        .iter()
        .map(|g| {
            let mut onehot = Matrix::zeros((g.n_nodes(), max_degree + 1));
            for (v, d) in g.degrees().into_iter().enumerate() {
                onehot[[v, d.min(max_degree)]] = 1.0;
            }
            let x = match mode {
                DegreeMode::Replace => onehot,
                DegreeMode::Append => hstack(&[g.node_attrs().clone(), onehot], g.n_nodes()),
            };
            let g = g.with_node_attrs(x)?;
            if g.edge_width() == 0 {
                g.with_edge_attrs(Matrix::ones((g.n_edges(), 1)))
            } else {
                Ok(g)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GraphDataset {
        graphs,
        ..dataset.clone()
    })
}

/// Makes a dataset ready for augmentation: degree features when node
/// attributes are absent, a ones column when edge attributes are absent.
pub fn ensure_attributes(dataset: &GraphDataset, max_degree: usize) -> Result<GraphDataset> {
    let (d, r) = dataset.widths()?;
    if d == 0 {
        return degree_featurize(dataset, max_degree, DegreeMode::Replace);
    }
    if r == 0 {
        let graphs = dataset
            .graphs
            .iter()
            .map(|g| g.with_edge_attrs(Matrix::ones((g.n_edges(), 1))))
            .collect::<Result<Vec<_>>>()?;
        return Ok(GraphDataset {
            graphs,
            ..dataset.clone()
        });
    }
    Ok(dataset.clone())
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    name: String,
    class_count: usize,
    graphs: usize,
}

#[derive(Serialize, Deserialize)]
struct Record {
    n: usize,
    edges: Vec<(usize, usize)>,
    node_width: usize,
    edge_width: usize,
    node_attrs: Vec<f64>,
    edge_attrs: Vec<f64>,
    label: usize,
    order: usize,
    origin: usize,
}

const FORMAT: &str = "sgncl-graphs";
const VERSION: u32 = 1;

pub fn write_interchange(dataset: &GraphDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    let header = Header {
        format: FORMAT.into(),
        version: VERSION,
        name: dataset.name.clone(),
        class_count: dataset.class_count,
        graphs: dataset.len(),
    };
    serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    for ((g, &label), tag) in dataset
        .graphs
        .iter()
        .zip(&dataset.labels)
        .zip(&dataset.tags)
    {
        let record = Record {
            n: g.n_nodes(),
            edges: g.edges().to_vec(),
            node_width: g.node_width(),
            edge_width: g.edge_width(),
            node_attrs: g.node_attrs().iter().copied().collect(),
            edge_attrs: g.edge_attrs().iter().copied().collect(),
            label,
            order: tag.order,
            origin: tag.origin,
        };
        serde_json::to_writer(&mut out, &record).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_interchange(path: impl AsRef<Path>) -> Result<GraphDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let err = |line: usize, msg: String| Error::Parse {
        file: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| err(1, "missing header".into()))??;
    let header: Header =
        serde_json::from_str(&header_line).map_err(|e| err(1, format!("bad header: {e}")))?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(err(
            1,
            format!("unsupported format {} v{}", header.format, header.version),
        ));
    }

    let mut graphs = Vec::with_capacity(header.graphs);
    let mut labels = Vec::with_capacity(header.graphs);
    let mut tags = Vec::with_capacity(header.graphs);
    for (i, line) in lines.enumerate() {
        let no = i + 2;
        let line = line?;
        if graphs.len() == header.graphs {
            return Err(err(
                no,
                format!("more than the declared {} records", header.graphs),
            ));
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| err(no, e.to_string()))?;
        let shape_err = |what: &str| err(no, format!("{what} length does not match its shape"));
        let x = Matrix::from_shape_vec((rec.n, rec.node_width), rec.node_attrs)
            .map_err(|_| shape_err("node_attrs"))?;
        let u = Matrix::from_shape_vec((rec.edges.len(), rec.edge_width), rec.edge_attrs)
            .map_err(|_| shape_err("edge_attrs"))?;
        let g = AttributedGraph::new(rec.n, rec.edges, x, u).map_err(|e| err(no, e.to_string()))?;
        graphs.push(g);
        labels.push(rec.label);
        tags.push(ViewTag {
            order: rec.order,
            origin: rec.origin,
        });
    }
    if graphs.len() != header.graphs {
        return Err(err(
            graphs.len() + 2,
            format!(
                "truncated: header declares {} records, found {}",
                header.graphs,
                graphs.len()
            ),
        ));
    }
    GraphDataset::with_tags(header.name, graphs, labels, header.class_count, tags)
        .map_err(|e| err(1, e.to_string()))
}

/// Writes then reads back.
pub fn roundtrip_interchange(
    dataset: &GraphDataset,
    path: impl AsRef<Path>,
) -> Result<GraphDataset> {
    write_interchange(dataset, path.as_ref())?;
    read_interchange(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::fs;

    fn write(dir: &Path, name: &str, suffix: &str, body: &str) {
        fs::write(dir.join(format!("{name}_{suffix}.txt")), body).unwrap();
    }

    /// Graph 1: triangle on nodes 1..3; graph 2: single edge on nodes 4,5.
    fn fixture(dir: &Path) {
        write(
            dir,
            "FIX",
            "A",
            "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n4, 5\n5, 4\n",
        );
        write(dir, "FIX", "graph_indicator", "1\n1\n1\n2\n2\n");
        write(dir, "FIX", "graph_labels", "-1\n1\n");
        write(dir, "FIX", "node_labels", "0\n2\n0\n2\n2\n");
        write(dir, "FIX", "edge_labels", "1\n1\n0\n0\n1\n1\n0\n0\n");
    }

    #[test]
    fn loads_synthetic_fixture() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        let ds = load_tud(dir.path(), "FIX").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.labels, vec![0, 1]);
        assert_eq!(ds.class_count, 2);
        let s = stats(&ds).unwrap();
        assert_eq!((s.graph_count, s.avg_nodes, s.avg_edges), (2, 2.5, 2.0));

        let tri = &ds.graphs[0];
        assert_eq!(tri.edges(), &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(
            tri.node_attrs(),
            &array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]
        );
        // (0,1) label 1, (0,2) label 1, (1,2) label 0
        assert_eq!(
            tri.edge_attrs(),
            &array![[0.0, 1.0], [0.0, 1.0], [1.0, 0.0]]
        );
        assert_eq!(ds.graphs[1].edges(), &[(0, 1)]);
    }

    #[test]
    fn directed_lines_halve_to_undirected_edges() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        let ds = load_tud(dir.path(), "FIX").unwrap();
        let total: usize = ds.graphs.iter().map(|g| g.n_edges()).sum();
        assert_eq!(total * 2, 8);
    }

    #[test]
    fn loading_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        assert_eq!(
            load_tud(dir.path(), "FIX").unwrap(),
            load_tud(dir.path(), "FIX").unwrap()
        );
    }

    #[test]
    fn self_loops_dropped_and_continuous_attrs_follow_labels() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "L", "A", "1, 1\n1, 2\n");
        write(dir.path(), "L", "graph_indicator", "1\n1\n");
        write(dir.path(), "L", "node_labels", "3\n4\n");
        write(dir.path(), "L", "node_attributes", "0.5, 1.5\n2.5, 3.5\n");
        let ds = load_tud(dir.path(), "L").unwrap();
        assert_eq!(ds.graphs[0].edges(), &[(0, 1)]);
        assert_eq!(
            ds.graphs[0].node_attrs(),
            &array![[1.0, 0.0, 0.5, 1.5], [0.0, 1.0, 2.5, 3.5]]
        );
        assert_eq!(ds.class_count, 1);
    }

    #[test]
    fn nested_directory_layout_is_found() {
        let dir = tempfile::tempdir().unwrap();
        let inner = dir.path().join("FIX");
        fs::create_dir(&inner).unwrap();
        fixture(&inner);
        assert_eq!(load_tud(dir.path(), "FIX").unwrap().len(), 2);
    }

    #[test]
    fn missing_and_dangling_inputs_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_tud(dir.path(), "NOPE"),
            Err(Error::MissingFile(_))
        ));

        write(dir.path(), "D", "A", "1, 2\n2, 9\n");
        write(dir.path(), "D", "graph_indicator", "1\n1\n");
        match load_tud(dir.path(), "D") {
            Err(Error::Parse { line: 2, msg, .. }) => assert!(msg.contains('9'), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }

        write(dir.path(), "X", "A", "1, 2\n");
        write(dir.path(), "X", "graph_indicator", "1\n2\n");
        assert!(matches!(
            load_tud(dir.path(), "X"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn degree_features() {
        let path = AttributedGraph::from_edges(3, vec![(0, 1), (1, 2)]).unwrap();
        let ds = GraphDataset::new("p", vec![path], vec![0], 1).unwrap();
        let f = degree_featurize(&ds, 3, DegreeMode::Append).unwrap();
        assert_eq!(
            f.graphs[0].node_attrs(),
            &array![
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 1.0, 0.0, 0.0]
            ]
        );
        assert_eq!(f.graphs[0].edge_attrs(), &array![[1.0], [1.0]]);

        let iso = AttributedGraph::from_edges(1, vec![]).unwrap();
        let ds = GraphDataset::new("i", vec![iso], vec![0], 1).unwrap();
        let f = degree_featurize(&ds, 2, DegreeMode::Replace).unwrap();
        assert_eq!(f.graphs[0].node_attrs(), &array![[1.0, 0.0, 0.0]]);

        let star = AttributedGraph::from_edges(6, (1..6).map(|v| (0, v)).collect()).unwrap();
        let ds = GraphDataset::new("s", vec![star], vec![0], 1).unwrap();
        let f = degree_featurize(&ds, 3, DegreeMode::Replace).unwrap();
        assert_eq!(
            f.graphs[0].node_attrs().row(0).to_vec(),
            vec![0.0, 0.0, 0.0, 1.0]
        );

        assert!(degree_featurize(&ds, 0, DegreeMode::Append).is_err());
    }

    #[test]
    fn degree_append_keeps_existing_columns() {
        let g = AttributedGraph::new(2, vec![(0, 1)], array![[7.0], [8.0]], array![[2.0]]).unwrap();
        let ds = GraphDataset::new("a", vec![g], vec![0], 1).unwrap();
        let f = degree_featurize(&ds, 1, DegreeMode::Append).unwrap();
        assert_eq!(
            f.graphs[0].node_attrs(),
            &array![[7.0, 0.0, 1.0], [8.0, 0.0, 1.0]]
        );
        assert_eq!(f.graphs[0].edge_attrs(), &array![[2.0]]);
    }

    #[test]
    fn stats_edge_cases() {
        let empty = GraphDataset::new("e", vec![], vec![], 2).unwrap();
        assert!(matches!(stats(&empty), Err(Error::EmptyDataset)));
        let one = GraphDataset::new(
            "o",
            vec![AttributedGraph::from_edges(0, vec![]).unwrap()],
            vec![0],
            3,
        )
        .unwrap();
        let s = stats(&one).unwrap();
        assert_eq!(
            (s.graph_count, s.class_count, s.avg_nodes, s.avg_edges),
            (1, 3, 0.0, 0.0)
        );
        assert_eq!(
            s.to_string(),
            "1 graphs, 3 classes, avg nodes 0.00, avg edges 0.00"
        );
    }

    #[test]
    fn dataset_invariants_enforced() {
        let g = AttributedGraph::from_edges(1, vec![]).unwrap();
        assert!(GraphDataset::new("x", vec![g.clone()], vec![2], 2).is_err());
        assert!(GraphDataset::new("x", vec![g], vec![], 2).is_err());
    }

    #[test]
    fn interchange_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = AttributedGraph::new(
            3,
            vec![(0, 1), (1, 2)],
            array![
                [0.1, 1e-300],
                [std::f64::consts::PI, -0.0],
                [1.0 / 3.0, 5e300]
            ],
            array![[0.2], [-7.25]],
        )
        .unwrap();
        let e =
            AttributedGraph::new(0, vec![], Matrix::zeros((0, 2)), Matrix::zeros((0, 1))).unwrap();
        let ds = GraphDataset::new("rt", vec![g, e], vec![1, 0], 2).unwrap();
        let back = roundtrip_interchange(&ds, dir.path().join("rt.jsonl")).unwrap();
        assert_eq!(back, ds);
        let bits = |d: &GraphDataset| {
            d.graphs[0]
                .node_attrs()
                .iter()
                .map(|x| x.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&back), bits(&ds));
        assert_eq!(back.graphs[1].node_width(), 2);
    }

    #[test]
    fn truncated_interchange_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let g = AttributedGraph::new(2, vec![(0, 1)], array![[1.0], [2.0]], array![[3.0]]).unwrap();
        let ds = GraphDataset::new("t", vec![g.clone(), g], vec![0, 0], 1).unwrap();
        write_interchange(&ds, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();

        // drop the final record
        let cut: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
        fs::write(&path, cut).unwrap();
        assert!(matches!(
            read_interchange(&path),
            Err(Error::Parse { line: 3, .. })
        ));

        // cut mid-record
        fs::write(&path, &text[..text.len() - 10]).unwrap();
        assert!(matches!(
            read_interchange(&path),
            Err(Error::Parse { line: 3, .. })
        ));
    }
}

//! Frozen-embedding evaluation and analysis exports.
//!
//! Embeddings are graph representations `H` from the original-view encoder
//! with the projection head dropped. Quality is scored with a stratified
//! k-fold linear probe: multinomial logistic regression with an L2 penalty,
//! fitted by full-batch gradient descent on features standardized with the
//! training fold's statistics.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contrastive::{
    prepare_views, row_cosines, train_prepared, OrderMode, PreparedViews, TrainConfig,
};
use crate::dataset::GraphDataset;
use crate::encoder::EncoderStack;
use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, Matrix};

const EMBED_CHUNK: usize = 64;
/// RNG stream for similarity-matrix sampling.
const SAMPLE_STREAM: u64 = 48;

/// One representation per graph, aligned with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub graph_ids: Vec<usize>,
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub rows: Matrix,
}

fn check_widths(dataset: &GraphDataset, stack: &EncoderStack) -> Result<()> {
    let (d, r) = dataset.widths()?;
    if d != stack.node_width {
        return Err(Error::WidthMismatch {
            order: 0,
            what: "node attribute",
            expected: stack.node_width,
            found: d,
        });
    }
    if r != stack.edge_width {
        return Err(Error::WidthMismatch {
            order: 0,
            what: "edge attribute",
            expected: stack.edge_width,
            found: r,
        });
    }
    Ok(())
}

fn represent_all(
    stack: &EncoderStack,
    order: usize,
    graphs: &[&AttributedGraph],
) -> Result<Matrix> {
    let parts = graphs
        .par_chunks(EMBED_CHUNK)
        .map(|chunk| stack.represent(order, chunk))
        .collect::<Result<Vec<_>>>()?;
    let views: Vec<_> = parts.iter().map(|m| m.view()).collect();
    ndarray::concatenate(Axis(0), &views).map_err(|e| Error::Autograd(e.to_string()))
}

fn project_all(stack: &EncoderStack, order: usize, graphs: &[&AttributedGraph]) -> Result<Matrix> {
    let parts = graphs
        .par_chunks(EMBED_CHUNK)
        .map(|chunk| stack.project_graphs(order, chunk))
        .collect::<Result<Vec<_>>>()?;
    let views: Vec<_> = parts.iter().map(|m| m.view()).collect();
    ndarray::concatenate(Axis(0), &views).map_err(|e| Error::Autograd(e.to_string()))
}

/// Embeds every graph with the original-view encoder.
pub fn embed(dataset: &GraphDataset, stack: &EncoderStack) -> Result<EmbeddingTable> {
    check_widths(dataset, stack)?;
    let graphs: Vec<&AttributedGraph> = dataset.graphs.iter().collect();
    Ok(EmbeddingTable {
        graph_ids: (0..dataset.len()).collect(),
        labels: dataset.labels.clone(),
        class_count: dataset.class_count,
        rows: represent_all(stack, 0, &graphs)?,
    })
}

/// Logistic-regression probe settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub l2: f64,
    pub iterations: usize,
    pub lr: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            iterations: 500,
            lr: 0.1,
        }
    }
}

/// Multinomial logistic regression on standardized features.
#[derive(Debug, Clone)]
pub struct LinearProbe {
    mean: Array1<f64>,
    scale: Array1<f64>,
    weight: Matrix,
    bias: Array1<f64>,
}

fn softmax_rows(logits: &mut Matrix) {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

impl LinearProbe {
    pub fn fit(x: &Matrix, labels: &[usize], classes: usize, config: &ProbeConfig) -> Self {
        let n = x.nrows();
        let mean = x
            .mean_axis(Axis(0))
            .unwrap_or_else(|| Array1::zeros(x.ncols()));
        let scale = x
            .std_axis(Axis(0), 0.0)
            .mapv(|s| if s > 1e-12 { s } else { 1.0 });
        let xs = (x - &mean) / &scale;
        let mut onehot = Matrix::zeros((n, classes));
        for (i, &y) in labels.iter().enumerate() {
            onehot[[i, y]] = 1.0;
        }
        let mut weight = Matrix::zeros((x.ncols(), classes));
        let mut bias = Array1::zeros(classes);
        for _ in 0..config.iterations {
            let mut p = xs.dot(&weight) + &bias;
            softmax_rows(&mut p);
            let residual = (p - &onehot) / n as f64;
            let gw = xs.t().dot(&residual) + &weight * config.l2;
            let gb = residual.sum_axis(Axis(0));
            weight.scaled_add(-config.lr, &gw);
            bias.scaled_add(-config.lr, &gb);
        }
        Self {
            mean,
            scale,
            weight,
            bias,
        }
    }

    /// Most probable class per row; ties go to the lower class index.
    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        let logits = ((x - &self.mean) / &self.scale).dot(&self.weight) + &self.bias;
        logits
            .rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (c, &v)| {
                        if v > best.1 {
                            (c, v)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect()
    }
}

/// Assigns every row to one of `folds` folds, class by class in shuffled
/// order, so each class is spread as evenly as possible.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 || folds > labels.len() {
        return Err(Error::Config(format!(
            "fold count must lie in 2..={}, got {folds}",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for c in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalCell {
    pub seed: u64,
    pub fold: usize,
    pub accuracy: f64,
}

/// Raw per-seed, per-fold accuracies. Aggregates are always recomputed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub cells: Vec<EvalCell>,
}

impl EvalReport {
    pub fn seeds(&self) -> Vec<u64> {
        let mut seeds: Vec<u64> = Vec::new();
        for c in &self.cells {
            if !seeds.contains(&c.seed) {
                seeds.push(c.seed);
            }
        }
        seeds
    }

    /// Mean fold accuracy of each seed, in first-appearance order.
    pub fn seed_means(&self) -> Vec<f64> {
        self.seeds()
            .into_iter()
            .map(|s| {
                let accs: Vec<f64> = self
                    .cells
                    .iter()
                    .filter(|c| c.seed == s)
                    .map(|c| c.accuracy)
                    .collect();
                accs.iter().sum::<f64>() / accs.len() as f64
            })
            .collect()
    }

    pub fn mean(&self) -> f64 {
        let m = self.seed_means();
        m.iter().sum::<f64>() / m.len() as f64
    }

    /// Population standard deviation of the per-seed means.
    pub fn std(&self) -> f64 {
        let m = self.seed_means();
        let mu = self.mean();
        (m.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / m.len() as f64).sqrt()
    }

    pub fn extend(&mut self, other: EvalReport) {
        self.cells.extend(other.cells);
    }
}

/// Stratified k-fold linear-probe accuracy, one split per seed.
pub fn kfold_probe(
    table: &EmbeddingTable,
    folds: usize,
    seeds: &[u64],
    config: &ProbeConfig,
) -> Result<EvalReport> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let n = table.labels.len();
    let present: Vec<usize> = (0..table.class_count)
        .filter(|c| table.labels.contains(c))
        .collect();
    let mut jobs = Vec::new();
    for &seed in seeds {
        let assignment = stratified_folds(&table.labels, folds, seed)?;
        for fold in 0..folds {
            let train: Vec<usize> = (0..n).filter(|&i| assignment[i] != fold).collect();
            let test: Vec<usize> = (0..n).filter(|&i| assignment[i] == fold).collect();
            if let Some(&class) = present
                .iter()
                .find(|&&c| !train.iter().any(|&i| table.labels[i] == c))
            {
                return Err(Error::ClassMissing { class, fold });
            }
            jobs.push((seed, fold, train, test));
        }
    }
    let cells = jobs
        .par_iter()
        .map(|(seed, fold, train, test)| {
            let x = table.rows.select(Axis(0), train);
            let y: Vec<usize> = train.iter().map(|&i| table.labels[i]).collect();
            let probe = LinearProbe::fit(&x, &y, table.class_count, config);
            let predicted = probe.predict(&table.rows.select(Axis(0), test));
            let correct = predicted
                .iter()
                .zip(test)
                .filter(|(p, &i)| **p == table.labels[i])
                .count();
            EvalCell {
                seed: *seed,
                fold: *fold,
                accuracy: correct as f64 / test.len() as f64,
            }
        })
        .collect();
    Ok(EvalReport { cells })
}

/// For each seed: train with that seed, embed, probe with a split drawn
/// from the same seed.
pub fn evaluate_prepared(
    dataset: &GraphDataset,
    views: &PreparedViews,
    config: &TrainConfig,
    folds: usize,
    seeds: &[u64],
) -> Result<EvalReport> {
    let mut report = EvalReport::default();
    for &seed in seeds {
        let cfg = TrainConfig {
            seed,
            ..config.clone()
        };
        let outcome = train_prepared(views, &cfg)?;
        let table = embed(dataset, &outcome.stack)?;
        report.extend(kfold_probe(
            &table,
            folds,
            &[seed],
            &ProbeConfig::default(),
        )?);
    }
    Ok(report)
}

pub fn evaluate(
    dataset: &GraphDataset,
    config: &TrainConfig,
    folds: usize,
    seeds: &[u64],
) -> Result<EvalReport> {
    config.validate()?;
    let views = prepare_views(dataset, config.mode.orders(), &config.guard)?;
    evaluate_prepared(dataset, &views, config, folds, seeds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q: f64,
    pub mean: f64,
    pub std: f64,
}

/// Fused-mode evaluation at every `q` of `grid`, sharing one set of views.
pub fn sweep_q(
    dataset: &GraphDataset,
    config: &TrainConfig,
    grid: &[f64],
    folds: usize,
    seeds: &[u64],
) -> Result<Vec<SweepRow>> {
    if let Some(bad) = grid.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::Config(format!("q grid value {bad} outside [0, 1]")));
    }
    let base = TrainConfig {
        mode: OrderMode::Fused,
        ..config.clone()
    };
    base.validate()?;
    let views = prepare_views(dataset, OrderMode::Fused.orders(), &base.guard)?;
    grid.iter()
        .map(|&q| {
            log::info!("q = {q}");
            let cfg = TrainConfig { q, ..base.clone() };
            let report = evaluate_prepared(dataset, &views, &cfg, folds, seeds)?;
            Ok(SweepRow {
                q,
                mean: report.mean(),
                std: report.std(),
            })
        })
        .collect()
}

/// `{0, 0.1, ..., 1.0}` computed as `i / 10`.
pub fn default_q_grid() -> Vec<f64> {
    (0..=10).map(|i| f64::from(i) / 10.0).collect()
}

/// Cosine similarities between sampled originals (rows) and their
/// augmented views (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub order: usize,
    pub graph_ids: Vec<usize>,
    pub labels: Vec<usize>,
    pub values: Matrix,
}

impl SimilarityMatrix {
    pub fn mean_diagonal(&self) -> f64 {
        self.values.diag().mean().unwrap_or(0.0)
    }

    /// `NaN` for a 1 x 1 matrix.
    pub fn mean_off_diagonal(&self) -> f64 {
        let n = self.values.nrows();
        let total = self.values.sum() - self.values.diag().sum();
        total / (n * n - n) as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("graph_id");
        for id in &self.graph_ids {
            write!(out, ",{id}:sgn{}", self.order).expect("writing to a String");
        }
        out.push('\n');
        for (id, row) in self.graph_ids.iter().zip(self.values.rows()) {
            write!(out, "{id}").expect("writing to a String");
            for v in row {
                write!(out, ",{v}").expect("writing to a String");
            }
            out.push('\n');
        }
        out
    }
}

/// Samples `sample` graphs with a seeded draw and compares their original
/// projections against the projections of their `order` views. With
/// `group_by_label` rows and columns are ordered by descending label, so
/// label 1 comes before label 0; otherwise by graph id.
pub fn similarity_matrix(
    dataset: &GraphDataset,
    stack: &EncoderStack,
    views: &PreparedViews,
    order: usize,
    sample: usize,
    group_by_label: bool,
    seed: u64,
) -> Result<SimilarityMatrix> {
    check_widths(dataset, stack)?;
    if sample == 0 || sample > views.len() {
        return Err(Error::Config(format!(
            "sample must lie in 1..={} (graphs with views), got {sample}",
            views.len()
        )));
    }
    let mut positions: Vec<usize> = (0..views.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SAMPLE_STREAM);
    positions.shuffle(&mut rng);
    positions.truncate(sample);
    positions.sort_unstable();
    if group_by_label {
        positions.sort_by_key(|&p| std::cmp::Reverse(dataset.labels[views.usable[p]]));
    }

    let originals = views.graphs(0)?;
    let augmented = views.graphs(order)?;
    let z = project_all(stack, 0, &pick(originals, &positions))?;
    let z_aug = project_all(stack, order, &pick(augmented, &positions))?;
    let norms = |m: &Matrix| -> Matrix {
        let mut m = m.clone();
        for mut r in m.rows_mut() {
            let n = r.dot(&r).sqrt().max(1e-12);
            r /= n;
        }
        m
    };
    let values = norms(&z).dot(&norms(&z_aug).t());
    debug_assert!(row_cosines(&z, &z_aug)
        .iter()
        .zip(values.diag())
        .all(|(a, b)| (a - b).abs() < 1e-12));
    let graph_ids: Vec<usize> = positions.iter().map(|&p| views.usable[p]).collect();
    Ok(SimilarityMatrix {
        order,
        labels: graph_ids.iter().map(|&g| dataset.labels[g]).collect(),
        graph_ids,
        values,
    })
}

fn pick<'a>(set: &'a [AttributedGraph], positions: &[usize]) -> Vec<&'a AttributedGraph> {
    positions.iter().map(|&p| &set[p]).collect()
}

/// `graph_id,label,h0,...`
pub fn embeddings_csv(table: &EmbeddingTable) -> String {
    let mut out = String::from("graph_id,label");
    for k in 0..table.rows.ncols() {
        write!(out, ",h{k}").expect("writing to a String");
    }
    out.push('\n');
    for ((id, label), row) in table
        .graph_ids
        .iter()
        .zip(&table.labels)
        .zip(table.rows.rows())
    {
        write!(out, "{id},{label}").expect("writing to a String");
        for v in row {
            write!(out, ",{v}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

/// `seed,fold,accuracy`
pub fn eval_grid_csv(report: &EvalReport) -> String {
    let mut out = String::from("seed,fold,accuracy\n");
    for c in &report.cells {
        writeln!(out, "{},{},{}", c.seed, c.fold, c.accuracy).expect("writing to a String");
    }
    out
}

/// `q,mean,std`
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("q,mean,std\n");
    for r in rows {
        writeln!(out, "{},{},{}", r.q, r.mean, r.std).expect("writing to a String");
    }
    out
}

pub fn write_csv(text: &str, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ensure_attributes;
    use crate::encoder::{Architecture, Pool};
    use crate::sgn::SizeGuard;
    use ndarray::array;
    use rand::Rng;

    fn table(rows: Matrix, labels: Vec<usize>) -> EmbeddingTable {
        EmbeddingTable {
            graph_ids: (0..labels.len()).collect(),
            class_count: labels.iter().max().unwrap() + 1,
            labels,
            rows,
        }
    }

    fn clusters(n: usize, seed: u64) -> EmbeddingTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let rows = Matrix::from_shape_fn((n, 4), |(i, _)| {
            let centre = if labels[i] == 0 { -3.0 } else { 3.0 };
            centre + rng.gen_range(-0.5..0.5)
        });
        table(rows, labels)
    }

    #[test]
    fn separable_clusters_are_classified_perfectly() {
        let r = kfold_probe(&clusters(60, 1), 10, &[0, 1, 2], &ProbeConfig::default()).unwrap();
        assert_eq!(r.cells.len(), 30);
        assert!(r.cells.iter().all(|c| c.accuracy == 1.0));
        assert_eq!((r.mean(), r.std()), (1.0, 0.0));
    }

    #[test]
    fn shuffled_labels_score_near_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200;
        let rows = Matrix::from_shape_fn((n, 8), |_| rng.gen_range(-1.0..1.0));
        let mut labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        labels.shuffle(&mut rng);
        let r = kfold_probe(
            &table(rows, labels),
            10,
            &[0, 1, 2, 3, 4],
            &ProbeConfig::default(),
        )
        .unwrap();
        assert!((r.mean() - 0.5).abs() <= 0.1, "{}", r.mean());
    }

    #[test]
    fn leave_one_out_on_four_points() {
        let t = table(
            array![[0.0, 0.0], [0.2, 0.1], [5.0, 5.0], [5.1, 4.8]],
            vec![0, 0, 1, 1],
        );
        let r = kfold_probe(&t, 4, &[3], &ProbeConfig::default()).unwrap();
        assert_eq!(r.mean(), 1.0);
    }

    #[test]
    fn folds_are_stratified_and_seeded() {
        let labels: Vec<usize> = (0..53).map(|i| usize::from(i % 3 == 0)).collect();
        let a = stratified_folds(&labels, 5, 9).unwrap();
        assert_eq!(a, stratified_folds(&labels, 5, 9).unwrap());
        assert_ne!(a, stratified_folds(&labels, 5, 10).unwrap());
        for c in 0..2 {
            let sizes: Vec<usize> = (0..5)
                .map(|f| (0..53).filter(|&i| labels[i] == c && a[i] == f).count())
                .collect();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
        assert!(stratified_folds(&labels, 1, 0).is_err());
        assert!(stratified_folds(&labels, 54, 0).is_err());
    }

    #[test]
    fn lone_class_member_is_reported() {
        let t = table(array![[0.0], [1.0], [2.0], [3.0]], vec![0, 0, 0, 1]);
        assert!(matches!(
            kfold_probe(&t, 2, &[0], &ProbeConfig::default()),
            Err(Error::ClassMissing { class: 1, .. })
        ));
    }

    #[test]
    fn report_aggregates_follow_the_grid() {
        let mut r = EvalReport::default();
        for (seed, accs) in [(1, [0.5, 1.0]), (2, [1.0, 1.0]), (3, [0.25, 0.75])] {
            for (fold, &accuracy) in accs.iter().enumerate() {
                r.cells.push(EvalCell {
                    seed,
                    fold,
                    accuracy,
                });
            }
        }
        assert_eq!(r.seed_means(), vec![0.75, 1.0, 0.5]);
        assert_eq!(r.mean(), 0.75);
        let var = (0.0f64 + 0.0625 + 0.0625) / 3.0;
        assert!((r.std() - var.sqrt()).abs() < 1e-15);
    }

    fn fixture() -> GraphDataset {
        let graphs = vec![
            AttributedGraph::from_edges(3, vec![(0, 1), (1, 2)]).unwrap(),
            AttributedGraph::from_edges(3, vec![(0, 1), (0, 2), (1, 2)]).unwrap(),
            AttributedGraph::from_edges(0, vec![]).unwrap(),
            AttributedGraph::from_edges(3, vec![(0, 2), (0, 1)]).unwrap(),
        ];
        let ds = GraphDataset::new("fixture", graphs, vec![0, 1, 0, 1], 2).unwrap();
        ensure_attributes(&ds, 4).unwrap()
    }

    fn stack(ds: &GraphDataset, orders: &[usize]) -> EncoderStack {
        let (d, r) = ds.widths().unwrap();
        let arch = Architecture {
            hidden: 6,
            layers: 2,
            pool: Pool::Sum,
        };
        EncoderStack::new(arch, d, r, orders, 5).unwrap()
    }

    #[test]
    fn embedding_is_deterministic_and_invariant() {
        let ds = fixture();
        let s = stack(&ds, &[0, 1]);
        let a = embed(&ds, &s).unwrap();
        assert_eq!(embeddings_csv(&a), embeddings_csv(&embed(&ds, &s).unwrap()));
        assert_eq!(a.rows.ncols(), 12);
        // graphs 0 and 3 are the same path with relabelled nodes
        for (x, y) in a.rows.row(0).iter().zip(a.rows.row(3)) {
            assert!((x - y).abs() <= 1e-9);
        }
        assert!(a.rows.row(2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn embedding_rejects_other_widths() {
        let ds = fixture();
        let (d, r) = ds.widths().unwrap();
        let arch = Architecture {
            hidden: 4,
            layers: 1,
            pool: Pool::Sum,
        };
        let s = EncoderStack::new(arch, d + 1, r, &[0], 1).unwrap();
        assert!(matches!(
            embed(&ds, &s),
            Err(Error::WidthMismatch { order: 0, .. })
        ));
    }

    #[test]
    fn single_sample_similarity_is_the_positive_pair() {
        let ds = fixture();
        let s = stack(&ds, &[0, 1]);
        let views = prepare_views(&ds, &[0, 1], &SizeGuard::default()).unwrap();
        let m = similarity_matrix(&ds, &s, &views, 1, 1, false, 3).unwrap();
        assert_eq!(m.values.dim(), (1, 1));
        let id = m.graph_ids[0];
        let z = s.project_graphs(0, &[&ds.graphs[id]]).unwrap();
        let za = s
            .project_graphs(
                1,
                &[&views.graphs(1).unwrap()[views.usable.iter().position(|&u| u == id).unwrap()]],
            )
            .unwrap();
        assert!((m.values[[0, 0]] - row_cosines(&z, &za)[0]).abs() < 1e-12);
        assert!(similarity_matrix(&ds, &s, &views, 1, 5, false, 3).is_err());
    }

    #[test]
    fn grouped_similarity_puts_label_one_first() {
        let ds = fixture();
        let s = stack(&ds, &[0, 1]);
        let views = prepare_views(&ds, &[0, 1], &SizeGuard::default()).unwrap();
        let m = similarity_matrix(&ds, &s, &views, 1, 4, true, 0).unwrap();
        assert_eq!(m.labels, vec![1, 1, 0, 0]);
        let csv = m.to_csv();
        assert!(
            csv.starts_with("graph_id,1:sgn1,3:sgn1,0:sgn1,2:sgn1\n"),
            "{csv}"
        );
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn q_grid_has_eleven_points() {
        let g = default_q_grid();
        assert_eq!(g.len(), 11);
        assert_eq!((g[0], g[3], g[10]), (0.0, 0.3, 1.0));
    }
}

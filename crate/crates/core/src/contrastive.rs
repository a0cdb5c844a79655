//! Contrastive objectives and the training loop.
//!
//! For a batch of `I` originals with projections `z` and augmented-view
//! projections `z~`, the per-graph ratio is
//!
//! ```text
//! S_i = exp(sim(z_i, z~_i) / tau) / sum_{j != i} exp(sim(z_i, z~_j) / tau)
//! ```
//!
//! with cosine `sim`. NT-Xent is `mean_i -log S_i`; the fused objective mixes
//! first- and second-order ratios inside the log,
//! `mean_i -log(q * S1_i + (1 - q) * S2_i)`, so `q = 1` is the first-order
//! loss and `q = 0` the second-order one. With
//! [`Denominator::IncludePositive`] the positive term joins the sum and every
//! ratio falls in `(0, 1)`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Axis;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{Tape, Var};
use crate::dataset::GraphDataset;
use crate::encoder::{Architecture, BoundStack, EncoderStack, GraphBatch, Pool};
use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, Matrix};
use crate::sgn::{augment_all, SizeGuard};

/// RNG stream used for batch sampling.
const BATCH_STREAM: u64 = 32;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OrderMode {
    #[default]
    Sgn1,
    Sgn2,
    Fused,
}

impl OrderMode {
    /// View orders the mode trains encoders for.
    pub fn orders(self) -> &'static [usize] {
        match self {
            OrderMode::Sgn1 => &[0, 1],
            OrderMode::Sgn2 => &[0, 2],
            OrderMode::Fused => &[0, 1, 2],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Denominator {
    #[default]
    NegativesOnly,
    IncludePositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: OrderMode,
    pub tau: f64,
    pub q: f64,
    pub epochs: usize,
    pub batch: usize,
    pub hidden: usize,
    pub layers: usize,
    pub lr: f64,
    pub seed: u64,
    pub guard: SizeGuard,
    pub pool: Pool,
    pub denominator: Denominator,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: OrderMode::Sgn1,
            tau: 0.5,
            q: 0.5,
            epochs: 40,
            batch: 32,
            hidden: 32,
            layers: 3,
            lr: 0.01,
            seed: 0,
            guard: SizeGuard::default(),
            pool: Pool::Sum,
            denominator: Denominator::NegativesOnly,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        check_tau(self.tau)?;
        check_q(self.q)?;
        if self.batch < 2 {
            return Err(Error::Config("batch size must be at least 2".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        self.guard.validate()?;
        self.architecture().validate()
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            hidden: self.hidden,
            layers: self.layers,
            pool: self.pool,
        }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::Config(format!(
            "temperature must be positive, got {tau}"
        )));
    }
    Ok(())
}

fn check_q(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Config(format!("q must lie in [0, 1], got {q}")));
    }
    Ok(())
}

/// Per-graph ratios `S_i` as an `I x 1` column.
///
/// Logits are shifted by `-1/tau` (cosines are at most 1) before
/// exponentiation; the shift cancels in the ratio.
pub fn positive_ratios(
    tape: &Tape,
    z: Var,
    z_aug: Var,
    tau: f64,
    denominator: Denominator,
) -> Result<Var> {
    check_tau(tau)?;
    let [i, _] = tape.shape(z);
    if tape.shape(z_aug)[0] != i {
        return Err(Error::shape(
            "positive_ratios",
            &tape.shape(z),
            &tape.shape(z_aug),
        ));
    }
    if i < 2 {
        return Err(Error::Config(format!(
            "contrastive batch needs at least 2 graphs for negatives, got {i}"
        )));
    }
    let sim = tape.cosine_similarity(z, z_aug)?;
    let logits = tape.add_scalar(tape.scale(sim, 1.0 / tau)?, -1.0 / tau)?;
    let e = tape.exp(logits)?;
    let mask = match denominator {
        Denominator::NegativesOnly => Matrix::from_shape_fn((i, i), |(r, c)| f64::from(r != c)),
        Denominator::IncludePositive => Matrix::ones((i, i)),
    };
    let masked = tape.mul(e, tape.constant(mask)?)?;
    let den = tape.sum_cols(masked)?;
    let num = tape.diagonal(e)?;
    tape.div(num, den)
}

/// `mean_i -log S_i`.
pub fn nt_xent(tape: &Tape, z: Var, z_aug: Var, tau: f64, denominator: Denominator) -> Result<Var> {
    let s = positive_ratios(tape, z, z_aug, tau, denominator)?;
    tape.scale(tape.mean_all(tape.log(s)?)?, -1.0)
}

/// `mean_i -log(q * S1_i + (1 - q) * S2_i)`.
pub fn fused_loss(
    tape: &Tape,
    z: Var,
    z1: Var,
    z2: Var,
    tau: f64,
    q: f64,
    denominator: Denominator,
) -> Result<Var> {
    check_q(q)?;
    let s1 = positive_ratios(tape, z, z1, tau, denominator)?;
    let s2 = positive_ratios(tape, z, z2, tau, denominator)?;
    let mix = tape.add(tape.scale(s1, q)?, tape.scale(s2, 1.0 - q)?)?;
    tape.scale(tape.mean_all(tape.log(mix)?)?, -1.0)
}

/// Cosine of each row of `a` with the same row of `b`.
pub fn row_cosines(a: &Matrix, b: &Matrix) -> Vec<f64> {
    a.axis_iter(Axis(0))
        .zip(b.axis_iter(Axis(0)))
        .map(|(x, y)| {
            let nx = x.dot(&x).sqrt().max(1e-12);
            let ny = y.dot(&y).sqrt().max(1e-12);
            x.dot(&y) / (nx * ny)
        })
        .collect()
}

/// Augmented views computed once per dataset.
#[derive(Debug, Clone)]
pub struct PreparedViews {
    pub orders: Vec<usize>,
    /// Dataset indices of graphs whose every required view fit the guard.
    pub usable: Vec<usize>,
    pub skipped: usize,
    pub node_width: usize,
    pub edge_width: usize,
    /// `views[k][p]`: order `orders[k]` view of graph `usable[p]`.
    views: Vec<Vec<AttributedGraph>>,
}

impl PreparedViews {
    pub fn len(&self) -> usize {
        self.usable.len()
    }

    pub fn is_empty(&self) -> bool {
        self.usable.is_empty()
    }

    pub fn graphs(&self, order: usize) -> Result<&[AttributedGraph]> {
        let k = self
            .orders
            .iter()
            .position(|&o| o == order)
            .ok_or_else(|| Error::Config(format!("views of order {order} were not prepared")))?;
        Ok(&self.views[k])
    }

    /// Packs the `order` views at `positions` (indices into `usable`).
    pub fn batch(&self, order: usize, positions: &[usize]) -> Result<GraphBatch> {
        let graphs = self.graphs(order)?;
        let picked: Vec<&AttributedGraph> = positions.iter().map(|&p| &graphs[p]).collect();
        GraphBatch::new(&picked, self.node_width, self.edge_width, order)
    }
}

/// Builds the views of every requested order. Graphs that exceed the guard
/// in any order are dropped and counted; other errors abort.
pub fn prepare_views(
    dataset: &GraphDataset,
    orders: &[usize],
    guard: &SizeGuard,
) -> Result<PreparedViews> {
    let (node_width, edge_width) = dataset.widths()?;
    let mut orders = orders.to_vec();
    orders.sort_unstable();
    orders.dedup();

    let n = dataset.len();
    let mut per_order: Vec<Vec<Option<AttributedGraph>>> = Vec::new();
    let mut ok = vec![true; n];
    for &order in &orders {
        if order == 0 {
            per_order.push(dataset.graphs.iter().cloned().map(Some).collect());
            continue;
        }
        let mut column = Vec::with_capacity(n);
        for (i, r) in augment_all(&dataset.graphs, order, guard)
            .into_iter()
            .enumerate()
        {
            match r {
                Ok(v) => column.push(Some(v.graph)),
                Err(Error::GuardExceeded { .. }) => {
                    ok[i] = false;
                    column.push(None);
                }
                Err(e) => return Err(e),
            }
        }
        per_order.push(column);
    }
    let usable: Vec<usize> = (0..n).filter(|&i| ok[i]).collect();
    let skipped = n - usable.len();
    if skipped > 0 {
        log::warn!("skipped {skipped} graphs whose augmented views exceed the size guard");
    }
    let views = per_order
        .into_iter()
        .map(|col| {
            col.into_iter()
                .zip(&ok)
                .filter(|(_, &keep)| keep)
                .map(|(g, _)| g.expect("kept graphs have every view"))
                .collect()
        })
        .collect();
    Ok(PreparedViews {
        orders,
        usable,
        skipped,
        node_width,
        edge_width,
        views,
    })
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut Matrix>, grads: &[Matrix]) {
        assert_eq!(params.len(), grads.len(), "one gradient per parameter");
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| Matrix::zeros(g.dim())).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for (((p, g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            ndarray::Zip::from(p)
                .and(g)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                });
        }
    }
}

/// One row of the loss history. Epoch 0 is measured before any update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub mean_pos_sim: f64,
    pub skipped_graphs: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub stack: EncoderStack,
    pub history: Vec<EpochRecord>,
    pub usable: Vec<usize>,
    pub skipped: usize,
}

/// Loss and mean positive-pair cosine of one batch, recorded on `tape`.
pub fn batch_objective(
    tape: &Tape,
    bound: &BoundStack,
    batches: &[GraphBatch],
    config: &TrainConfig,
) -> Result<(Var, f64)> {
    let z: Vec<Var> = batches
        .iter()
        .map(|b| bound.embed(tape, b))
        .collect::<Result<_>>()?;
    let pos = |k: usize| {
        let c = row_cosines(&tape.value(z[0]), &tape.value(z[k]));
        c.iter().sum::<f64>() / c.len() as f64
    };
    let (tau, den) = (config.tau, config.denominator);
    match (config.mode, z.len()) {
        (OrderMode::Sgn1 | OrderMode::Sgn2, 2) => {
            Ok((nt_xent(tape, z[0], z[1], tau, den)?, pos(1)))
        }
        (OrderMode::Fused, 3) => {
            let q = config.q;
            let loss = fused_loss(tape, z[0], z[1], z[2], tau, q, den)?;
            Ok((loss, q * pos(1) + (1.0 - q) * pos(2)))
        }
        (mode, n) => Err(Error::Config(format!(
            "{mode:?} mode given {n} view batches"
        ))),
    }
}

fn partition(n: usize, batch: usize, rng: Option<&mut ChaCha8Rng>) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(rng) = rng {
        order.shuffle(rng);
    }
    let mut chunks: Vec<Vec<usize>> = order.chunks(batch).map(<[usize]>::to_vec).collect();
    // a lone graph has no negatives
    if chunks.len() > 1 && chunks.last().is_some_and(|c| c.len() < 2) {
        let last = chunks.pop().expect("non-empty");
        chunks.last_mut().expect("non-empty").extend(last);
    }
    chunks
}

fn run_batch(
    stack: &EncoderStack,
    views: &PreparedViews,
    positions: &[usize],
    config: &TrainConfig,
    with_grads: bool,
) -> Result<(f64, f64, Option<Vec<Matrix>>)> {
    let batches = config
        .mode
        .orders()
        .iter()
        .map(|&o| views.batch(o, positions))
        .collect::<Result<Vec<_>>>()?;
    let tape = Tape::new();
    let bound = stack.bind(&tape, with_grads)?;
    let (loss, pos) = batch_objective(&tape, &bound, &batches, config)?;
    let value = tape.scalar(loss);
    if !with_grads {
        return Ok((value, pos, None));
    }
    let grads = tape.backward(loss)?;
    let g = bound.params().into_iter().map(|v| grads.wrt(v)).collect();
    Ok((value, pos, Some(g)))
}

/// Trains on views prepared for (at least) the mode's orders.
pub fn train_prepared(views: &PreparedViews, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    for &o in config.mode.orders() {
        views.graphs(o)?;
    }
    if views.len() < 2 {
        return Err(Error::NoUsableGraphs(format!(
            "{} graphs fit the size guard, at least 2 are needed",
            views.len()
        )));
    }
    let mut stack = EncoderStack::new(
        config.architecture(),
        views.node_width,
        views.edge_width,
        config.mode.orders(),
        config.seed,
    )?;
    let mut adam = Adam::new(config.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(BATCH_STREAM);

    let n = views.len();
    let record = |epoch: usize, sums: (f64, f64)| EpochRecord {
        epoch,
        mean_loss: sums.0 / n as f64,
        mean_pos_sim: sums.1 / n as f64,
        skipped_graphs: views.skipped,
    };

    let mut history = Vec::with_capacity(config.epochs + 1);
    let mut sums = (0.0, 0.0);
    for positions in partition(n, config.batch, None) {
        let (loss, pos, _) = run_batch(&stack, views, &positions, config, false)?;
        sums.0 += loss * positions.len() as f64;
        sums.1 += pos * positions.len() as f64;
    }
    history.push(record(0, sums));

    for epoch in 1..=config.epochs {
        let mut sums = (0.0, 0.0);
        for positions in partition(n, config.batch, Some(&mut rng)) {
            let (loss, pos, grads) = run_batch(&stack, views, &positions, config, true)?;
            adam.step(stack.params_mut(), &grads.expect("requested"));
            sums.0 += loss * positions.len() as f64;
            sums.1 += pos * positions.len() as f64;
        }
        let r = record(epoch, sums);
        log::debug!(
            "epoch {epoch}: loss {:.6}, positive similarity {:.4}",
            r.mean_loss,
            r.mean_pos_sim
        );
        history.push(r);
    }
    Ok(TrainOutcome {
        stack,
        history,
        usable: views.usable.clone(),
        skipped: views.skipped,
    })
}

/// Prepares the views `config.mode` needs and trains.
pub fn train(dataset: &GraphDataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let views = prepare_views(dataset, config.mode.orders(), &config.guard)?;
    train_prepared(&views, config)
}

/// `epoch,mean_loss,mean_pos_sim,skipped_graphs`
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,mean_loss,mean_pos_sim,skipped_graphs\n");
    for r in history {
        writeln!(
            out,
            "{},{},{},{}",
            r.epoch, r.mean_loss, r.mean_pos_sim, r.skipped_graphs
        )
        .expect("writing to a String");
    }
    out
}

pub fn write_history_csv(history: &[EpochRecord], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, history_csv(history))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::grad_check;
    use crate::dataset::ensure_attributes;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn unit_rows(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Matrix::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0));
        for mut r in m.rows_mut() {
            let n = r.dot(&r).sqrt();
            r /= n;
        }
        m
    }

    fn loss_of(z: &Matrix, za: &Matrix, tau: f64, den: Denominator) -> Result<f64> {
        let t = Tape::new();
        let (a, b) = (t.constant(z.clone())?, t.constant(za.clone())?);
        Ok(t.scalar(nt_xent(&t, a, b, tau, den)?))
    }

    fn fused_of(z: &Matrix, z1: &Matrix, z2: &Matrix, tau: f64, q: f64) -> f64 {
        let t = Tape::new();
        let v: Vec<Var> = [z, z1, z2]
            .iter()
            .map(|m| t.constant((*m).clone()).unwrap())
            .collect();
        t.scalar(fused_loss(&t, v[0], v[1], v[2], tau, q, Denominator::NegativesOnly).unwrap())
    }

    /// Direct evaluation with plain loops, no shifting.
    fn oracle_ratio(z: &Matrix, za: &Matrix, i: usize, tau: f64) -> f64 {
        let cos = |a: usize, b: usize| {
            let (x, y) = (z.row(a), za.row(b));
            x.dot(&y) / (x.dot(&x).sqrt() * y.dot(&y).sqrt())
        };
        let mut den = 0.0;
        for j in 0..z.nrows() {
            if j != i {
                den += (cos(i, j) / tau).exp();
            }
        }
        (cos(i, i) / tau).exp() / den
    }

    #[test]
    fn two_orthogonal_pairs() {
        let z = array![[1.0, 0.0], [0.0, 1.0]];
        let l = loss_of(&z, &z, 1.0, Denominator::NegativesOnly).unwrap();
        assert!((l + 1.0).abs() < 1e-15, "{l}");
    }

    #[test]
    fn identical_rows_give_log_of_negatives() {
        for i in 2..8 {
            let row = unit_rows(1, 5, i as u64);
            let z = Matrix::from_shape_fn((i, 5), |(_, c)| row[[0, c]]);
            let l = loss_of(&z, &z, 0.5, Denominator::NegativesOnly).unwrap();
            assert!((l - ((i - 1) as f64).ln()).abs() < 1e-12, "I={i}: {l}");
        }
    }

    #[test]
    fn large_temperature_approaches_log_of_negatives() {
        let z = unit_rows(5, 4, 1);
        let za = unit_rows(5, 4, 2);
        let l = loss_of(&z, &za, 1e9, Denominator::NegativesOnly).unwrap();
        assert!((l - 4f64.ln()).abs() < 1e-8, "{l}");
    }

    #[test]
    fn fused_endpoints_are_exact() {
        let (z, z1, z2) = (unit_rows(6, 4, 1), unit_rows(6, 4, 2), unit_rows(6, 4, 3));
        let den = Denominator::NegativesOnly;
        assert_eq!(
            fused_of(&z, &z1, &z2, 0.5, 1.0),
            loss_of(&z, &z1, 0.5, den).unwrap()
        );
        assert_eq!(
            fused_of(&z, &z1, &z2, 0.5, 0.0),
            loss_of(&z, &z2, 0.5, den).unwrap()
        );
    }

    #[test]
    fn fused_midpoint_matches_direct_evaluation() {
        let z = array![[1.0, 0.0], [0.6, 0.8]];
        let z1 = array![[0.8, 0.6], [0.0, 1.0]];
        let z2 = array![[-0.6, 0.8], [1.0, 0.0]];
        let tau = 0.7;
        let expected = (0..2)
            .map(|i| {
                let s1 = oracle_ratio(&z, &z1, i, tau);
                let s2 = oracle_ratio(&z, &z2, i, tau);
                -(0.5 * s1 + 0.5 * s2).ln()
            })
            .sum::<f64>()
            / 2.0;
        let got = fused_of(&z, &z1, &z2, tau, 0.5);
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    }

    #[test]
    fn ratios_lie_in_range() {
        let (z, za) = (unit_rows(7, 3, 5), unit_rows(7, 3, 6));
        for den in [Denominator::NegativesOnly, Denominator::IncludePositive] {
            let t = Tape::new();
            let (a, b) = (
                t.constant(z.clone()).unwrap(),
                t.constant(za.clone()).unwrap(),
            );
            let s = t.value(positive_ratios(&t, a, b, 0.3, den).unwrap());
            for (i, &v) in s.iter().enumerate() {
                assert!(v > 0.0);
                if den == Denominator::IncludePositive {
                    assert!(v < 1.0);
                } else {
                    assert!((v - oracle_ratio(&z, &za, i, 0.3)).abs() < 1e-12 * v.max(1.0));
                }
            }
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let z = unit_rows(1, 3, 1);
        assert!(loss_of(&z, &z, 0.5, Denominator::NegativesOnly).is_err());
        let z = unit_rows(3, 3, 1);
        assert!(loss_of(&z, &z, 0.0, Denominator::NegativesOnly).is_err());
        assert!(loss_of(&z, &z, -1.0, Denominator::NegativesOnly).is_err());
        let t = Tape::new();
        let v = t.constant(z).unwrap();
        assert!(fused_loss(&t, v, v, v, 0.5, 1.5, Denominator::NegativesOnly).is_err());
    }

    #[test]
    fn loss_gradients_match_finite_differences() {
        let params = [unit_rows(3, 4, 1), unit_rows(3, 4, 2), unit_rows(3, 4, 3)];
        let den = Denominator::NegativesOnly;
        let r = grad_check(|t, v| nt_xent(t, v[0], v[1], 0.5, den), &params[..2], 1e-5).unwrap();
        assert!(r.max_rel_error <= 1e-6, "{r:?}");
        let r = grad_check(
            |t, v| fused_loss(t, v[0], v[1], v[2], 0.5, 0.3, den),
            &params,
            1e-5,
        )
        .unwrap();
        assert!(r.max_rel_error <= 1e-6, "{r:?}");
        let den = Denominator::IncludePositive;
        let r = grad_check(
            |t, v| fused_loss(t, v[0], v[1], v[2], 0.5, 0.3, den),
            &params,
            1e-5,
        )
        .unwrap();
        assert!(r.max_rel_error <= 1e-6, "{r:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn common_row_permutation_leaves_loss_unchanged(seed in 0u64..10_000, rows in 2usize..9) {
            let (z, za) = (unit_rows(rows, 4, seed), unit_rows(rows, 4, seed + 1));
            let mut perm: Vec<usize> = (0..rows).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let (pz, pza) = (z.select(Axis(0), &perm), za.select(Axis(0), &perm));
            for den in [Denominator::NegativesOnly, Denominator::IncludePositive] {
                let a = loss_of(&z, &za, 0.5, den).unwrap();
                let b = loss_of(&pz, &pza, 0.5, den).unwrap();
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn fused_loss_is_continuous_in_q(seed in 0u64..10_000, q in 0.0f64..1.0) {
            let (z, z1, z2) = (unit_rows(4, 3, seed), unit_rows(4, 3, seed + 1), unit_rows(4, 3, seed + 2));
            let a = fused_of(&z, &z1, &z2, 0.5, q);
            let b = fused_of(&z, &z1, &z2, 0.5, (q + 1e-9).min(1.0));
            prop_assert!((a - b).abs() < 1e-6);
        }
    }

    fn synthetic_dataset(count: usize, seed: u64) -> GraphDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut graphs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..count {
            let n = rng.gen_range(4..9);
            let label = i % 2;
            let mut edges: Vec<(usize, usize)> = if label == 0 {
                (0..n).map(|v| (v, (v + 1) % n)).collect()
            } else {
                (1..n).map(|v| (0, v)).collect()
            };
            if rng.gen_bool(0.5) {
                edges.push((1, 3));
            }
            let g = AttributedGraph::from_edges(n, crate::graph::canonicalize_edge_list(edges))
                .unwrap();
            graphs.push(g);
            labels.push(label);
        }
        let ds = GraphDataset::new("synthetic", graphs, labels, 2).unwrap();
        ensure_attributes(&ds, 8).unwrap()
    }

    fn small_config(mode: OrderMode) -> TrainConfig {
        TrainConfig {
            mode,
            hidden: 16,
            seed: 7,
            batch: 8,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let ds = synthetic_dataset(32, 1);
        let cfg = small_config(OrderMode::Sgn1);
        let a = train(&ds, &cfg).unwrap();
        let b = train(&ds, &cfg).unwrap();
        assert_eq!(a.history.len(), 41);
        assert!(
            a.history[40].mean_loss < a.history[1].mean_loss,
            "{:?}",
            a.history
        );
        assert_eq!(history_csv(&a.history), history_csv(&b.history));
        assert_eq!(a.stack, b.stack);
    }

    #[test]
    fn fused_endpoints_reproduce_single_order_training() {
        let ds = synthetic_dataset(12, 2);
        let short = |mode, q| TrainConfig {
            epochs: 3,
            q,
            ..small_config(mode)
        };
        let fused1 = train(&ds, &short(OrderMode::Fused, 1.0)).unwrap();
        let sgn1 = train(&ds, &short(OrderMode::Sgn1, 0.5)).unwrap();
        assert_eq!(fused1.history, sgn1.history);
        assert_eq!(fused1.stack.view(0).unwrap(), sgn1.stack.view(0).unwrap());
        let fused0 = train(&ds, &short(OrderMode::Fused, 0.0)).unwrap();
        let sgn2 = train(&ds, &short(OrderMode::Sgn2, 0.5)).unwrap();
        assert_eq!(fused0.history, sgn2.history);
    }

    #[test]
    fn guard_skips_are_counted() {
        let ds = synthetic_dataset(12, 3);
        let mut cfg = small_config(OrderMode::Fused);
        cfg.epochs = 1;
        // stars with 7 or 8 nodes have more than 40 SGN² edges
        cfg.guard = SizeGuard::new(1000, 40).unwrap();
        let out = train(&ds, &cfg).unwrap();
        assert!(out.skipped > 0);
        assert_eq!(out.usable.len() + out.skipped, 12);
        assert!(out.history.iter().all(|r| r.skipped_graphs == out.skipped));

        cfg.guard = SizeGuard::new(1, 1).unwrap();
        assert!(matches!(train(&ds, &cfg), Err(Error::NoUsableGraphs(_))));
    }

    #[test]
    fn partition_never_leaves_a_singleton() {
        for n in 2..40 {
            for b in 2..10 {
                let parts = partition(n, b, None);
                assert!(parts.iter().all(|p| p.len() >= 2));
                assert_eq!(parts.iter().map(Vec::len).sum::<usize>(), n);
            }
        }
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut p = array![[1.0, -2.0]];
        let mut adam = Adam::new(0.1);
        adam.step(vec![&mut p], &[array![[3.0, -0.5]]]);
        assert!((p[[0, 0]] - 0.9).abs() < 1e-7 && (p[[0, 1]] + 1.9).abs() < 1e-7);
        let mut z = array![[0.25]];
        let mut adam = Adam::new(0.1);
        adam.step(vec![&mut z], &[array![[0.0]]]);
        assert_eq!(z[[0, 0]], 0.25);
    }

    /// Central differences per coordinate with an absolute slack for the
    /// f64 rounding of the loss itself (a few ulp of f divided by 2e).
    #[test]
    fn end_to_end_gradients_match_within_rounding() {
        let ds = synthetic_dataset(3, 11);
        for (mode, q) in [(OrderMode::Sgn1, 0.5), (OrderMode::Fused, 0.3)] {
            let config = TrainConfig {
                mode,
                q,
                hidden: 4,
                layers: 2,
                ..TrainConfig::default()
            };
            let views = prepare_views(&ds, mode.orders(), &config.guard).unwrap();
            let batches: Vec<GraphBatch> = mode
                .orders()
                .iter()
                .map(|&o| views.batch(o, &[0, 1, 2]).unwrap())
                .collect();
            let stack = EncoderStack::new(
                config.architecture(),
                views.node_width,
                views.edge_width,
                mode.orders(),
                5,
            )
            .unwrap();
            let params: Vec<Matrix> = stack
                .named_params()
                .into_iter()
                .map(|(_, m)| m.clone())
                .collect();
            let loss = |ps: &[Matrix]| -> (f64, Vec<Matrix>) {
                let t = Tape::new();
                let vars: Vec<Var> = ps
                    .iter()
                    .map(|m| t.leaf(m.clone(), true).unwrap())
                    .collect();
                let bound = stack.bind_vars(&t, &vars).unwrap();
                let (l, _) = batch_objective(&t, &bound, &batches, &config).unwrap();
                let g = t.backward(l).unwrap();
                (t.scalar(l), vars.iter().map(|&v| g.wrt(v)).collect())
            };
            let (_, analytic) = loss(&params);
            let eps = 1e-5;
            let mut checked = 0;
            for p in 0..params.len() {
                for idx in 0..params[p].len() {
                    let (r, c) = (idx / params[p].ncols(), idx % params[p].ncols());
                    let mut plus = params.clone();
                    plus[p][[r, c]] += eps;
                    let mut minus = params.clone();
                    minus[p][[r, c]] -= eps;
                    let numeric = (loss(&plus).0 - loss(&minus).0) / (2.0 * eps);
                    let a = analytic[p][[r, c]];
                    let bound = 1e-6 * a.abs().max(numeric.abs()) + 1e-9;
                    assert!(
                        (a - numeric).abs() <= bound,
                        "{mode:?} param {p} ({r},{c}): {a} vs {numeric}"
                    );
                    checked += 1;
                }
            }
            assert!(checked > 100);
        }
    }
}

//! Compares tape gradients of the full contrastive objective with central
//! finite differences on a batch of three graphs.
//!
//! cargo run --release --example grad_check

use sgncl::autograd::{grad_check, Tape, Var};
use sgncl::contrastive::{batch_objective, prepare_views, OrderMode, TrainConfig};
use sgncl::dataset::{ensure_attributes, load_tud, DEFAULT_MAX_DEGREE};
use sgncl::encoder::{EncoderStack, GraphBatch};
use sgncl::{GraphDataset, Matrix};

fn main() -> sgncl::Result<()> {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let ds = ensure_attributes(&load_tud(dir, "MUTAG")?, DEFAULT_MAX_DEGREE)?;
    let three = GraphDataset::new("three", ds.graphs[..3].to_vec(), ds.labels[..3].to_vec(), 2)?;

    for mode in [OrderMode::Sgn1, OrderMode::Sgn2, OrderMode::Fused] {
        let config = TrainConfig {
            mode,
            hidden: 8,
            q: 0.3,
            ..TrainConfig::default()
        };
        let views = prepare_views(&three, mode.orders(), &config.guard)?;
        let batches: Vec<GraphBatch> = mode
            .orders()
            .iter()
            .map(|&o| views.batch(o, &[0, 1, 2]))
            .collect::<sgncl::Result<_>>()?;
        let stack = EncoderStack::new(
            config.architecture(),
            views.node_width,
            views.edge_width,
            mode.orders(),
            config.seed,
        )?;
        let params: Vec<Matrix> = stack
            .named_params()
            .into_iter()
            .map(|(_, m)| m.clone())
            .collect();
        let report = grad_check(
            |t: &Tape, v: &[Var]| {
                let bound = stack.bind_vars(t, v)?;
                Ok(batch_objective(t, &bound, &batches, &config)?.0)
            },
            &params,
            1e-5,
        )?;
        println!(
            "{mode:?}: {} coordinates, max relative error {:.2e} at {:?} (analytic {:.4e}, numeric {:.4e})",
            report.checked,
            report.max_rel_error,
            report.worst,
            report.worst_analytic,
            report.worst_numeric
        );
    }
    Ok(())
}

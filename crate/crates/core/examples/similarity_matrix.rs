//! Trains first-order encoders on MUTAG and compares original-to-view cosine
//! similarities before and after training.
//!
//! cargo run --release --example similarity_matrix [-- <csv out>]

use sgncl::contrastive::{prepare_views, train_prepared, TrainConfig};
use sgncl::dataset::{ensure_attributes, load_tud, DEFAULT_MAX_DEGREE};
use sgncl::encoder::EncoderStack;
use sgncl::eval::{similarity_matrix, write_csv};

fn main() -> sgncl::Result<()> {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let ds = ensure_attributes(&load_tud(dir, "MUTAG")?, DEFAULT_MAX_DEGREE)?;
    let config = TrainConfig::default();
    let views = prepare_views(&ds, config.mode.orders(), &config.guard)?;

    let untrained = EncoderStack::new(
        config.architecture(),
        views.node_width,
        views.edge_width,
        config.mode.orders(),
        config.seed,
    )?;
    let trained = train_prepared(&views, &config)?.stack;
    for (name, stack) in [("untrained", &untrained), ("trained", &trained)] {
        let m = similarity_matrix(&ds, stack, &views, 1, 20, true, config.seed)?;
        println!(
            "{name}: mean diagonal {:.4}, mean off-diagonal {:.4}",
            m.mean_diagonal(),
            m.mean_off_diagonal()
        );
        if name == "trained" {
            if let Some(path) = std::env::args().nth(1) {
                write_csv(&m.to_csv(), &path)?;
                println!("wrote {path}");
            }
        }
    }
    Ok(())
}

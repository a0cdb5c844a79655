//! Sweeps the fused-loss weight q on MUTAG and prints probe accuracy per q.
//! Defaults to a short run; pass epochs and seeds for the full protocol.
//!
//! cargo run --release --example q_sweep [-- <epochs> <seed count>]

use sgncl::contrastive::TrainConfig;
use sgncl::dataset::{ensure_attributes, load_tud, DEFAULT_MAX_DEGREE};
use sgncl::eval::{default_q_grid, sweep_csv, sweep_q};

fn main() -> sgncl::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>());
    let epochs = args.next().transpose().ok().flatten().unwrap_or(10);
    let seeds = args.next().transpose().ok().flatten().unwrap_or(2);
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let ds = ensure_attributes(&load_tud(dir, "MUTAG")?, DEFAULT_MAX_DEGREE)?;

    let config = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let seeds: Vec<u64> = (0..seeds as u64).collect();
    let rows = sweep_q(&ds, &config, &default_q_grid(), 10, &seeds)?;
    print!("{}", sweep_csv(&rows));
    let best = rows
        .iter()
        .max_by(|a, b| a.mean.total_cmp(&b.mean))
        .expect("non-empty grid");
    println!("best q = {} ({:.4})", best.q, best.mean);
    Ok(())
}

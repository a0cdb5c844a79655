//! Loads a TU-format dataset, prints its summary, fills in degree features
//! when attributes are missing, and round-trips it through the JSON Lines
//! interchange format.
//!
//! cargo run --example dataset_stats [-- <data dir> <name>]

use std::path::PathBuf;

use sgncl::dataset::DEFAULT_MAX_DEGREE;
use sgncl::dataset::{ensure_attributes, load_tud, read_interchange, stats, write_interchange};

fn main() -> sgncl::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"));
    let name = args.next().unwrap_or_else(|| "MUTAG".to_string());

    let raw = load_tud(&dir, &name)?;
    println!("{name}: {}", stats(&raw)?);
    let (d, r) = raw.widths()?;
    println!("raw attribute widths: nodes {d}, edges {r}");

    let ds = ensure_attributes(&raw, DEFAULT_MAX_DEGREE)?;
    let (d, r) = ds.widths()?;
    println!("model input widths: nodes {d}, edges {r}");
    let mut per_class = vec![0; ds.class_count];
    for &l in &ds.labels {
        per_class[l] += 1;
    }
    println!("class sizes: {per_class:?}");

    let path = std::env::temp_dir().join(format!("{name}.jsonl"));
    write_interchange(&ds, &path)?;
    let back = read_interchange(&path)?;
    println!(
        "interchange round trip through {}: {}",
        path.display(),
        if back.graphs == ds.graphs && back.labels == ds.labels {
            "identical"
        } else {
            "DIFFERENT"
        }
    );
    std::fs::remove_file(&path)?;
    Ok(())
}

//! Evaluates NT-Xent and the fused two-order loss on hand-made embeddings.
//!
//! cargo run --example contrastive_losses

use ndarray::array;
use sgncl::autograd::Tape;
use sgncl::contrastive::{fused_loss, nt_xent, positive_ratios, Denominator};

fn main() -> sgncl::Result<()> {
    let tape = Tape::new();
    let z = tape.constant(array![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])?;
    // aligned views, a rotated copy, and a batch where every row is the same
    let aligned = tape.constant(array![[0.9, 0.1], [0.1, 0.9], [-0.9, 0.1]])?;
    let rotated = tape.constant(array![[0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])?;
    let same = tape.constant(array![[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])?;
    let tau = 0.5;

    for den in [Denominator::NegativesOnly, Denominator::IncludePositive] {
        println!("{den:?}");
        for (name, view) in [("aligned", aligned), ("rotated", rotated)] {
            let loss = tape.scalar(nt_xent(&tape, z, view, tau, den)?);
            let ratios = tape.value(positive_ratios(&tape, z, view, tau, den)?);
            println!(
                "  {name}: loss {loss:.4}, per-row ratios {:?}",
                ratios.column(0).to_vec()
            );
        }
        for q in [0.0, 0.5, 1.0] {
            let loss = tape.scalar(fused_loss(&tape, z, aligned, rotated, tau, q, den)?);
            println!("  fused q={q}: {loss:.4}");
        }
    }
    let loss = tape.scalar(nt_xent(&tape, same, same, tau, Denominator::NegativesOnly)?);
    println!("identical rows: {loss:.6} (ln 2 = {:.6})", 2f64.ln());
    Ok(())
}

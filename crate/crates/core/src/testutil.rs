//! Shared test fixtures.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{AttributedGraph, Matrix};

/// Random simple graph on `1..=max_n` nodes, topology only.
pub fn arb_graph(max_n: usize) -> impl Strategy<Value = AttributedGraph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        proptest::collection::vec(any::<bool>(), pairs).prop_map(move |mask| {
            let mut edges = Vec::new();
            let mut k = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if mask[k] {
                        edges.push((u, v));
                    }
                    k += 1;
                }
            }
            AttributedGraph::from_edges(n, edges).unwrap()
        })
    })
}

/// Fills node and edge attributes with seeded uniform values.
pub fn with_random_attrs(g: &AttributedGraph, d: usize, r: usize, seed: u64) -> AttributedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Matrix::from_shape_fn((g.n_nodes(), d), |_| rng.gen_range(-1.0..1.0));
    let u = Matrix::from_shape_fn((g.n_edges(), r), |_| rng.gen_range(-1.0..1.0));
    AttributedGraph::new(g.n_nodes(), g.edges().to_vec(), x, u).unwrap()
}

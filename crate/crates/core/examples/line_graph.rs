//! Builds first- and second-order views of a small attributed graph and
//! prints how topology and attribute widths grow.
//!
//! cargo run --example line_graph

use ndarray::array;
use sgncl::graph::open_triangles;
use sgncl::sgn::{line_graph, rows, sgn};
use sgncl::{AttributedGraph, SgnView, SizeGuard};

fn main() -> sgncl::Result<()> {
    // a triangle 0-1-2 with a pendant node 3 on node 2
    let g = AttributedGraph::new(
        4,
        vec![(0, 1), (1, 2), (0, 2), (2, 3)],
        array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]],
        array![[1.0], [2.0], [3.0], [4.0]],
    )?;
    println!("original: {} nodes, edges {:?}", g.n_nodes(), g.edges());
    for t in open_triangles(&g) {
        println!(
            "  open triangle e{} -[{}]- e{}",
            t.edge_a, t.center, t.edge_b
        );
    }

    let lg = line_graph(&g);
    println!("line graph: {} nodes, edges {:?}", lg.n_nodes(), lg.edges());

    let guard = SizeGuard::default();
    let original = SgnView::original(g, 0);
    for order in 1..=2 {
        let view = sgn(&original, order, &guard)?;
        let vg = &view.graph;
        println!(
            "order {order}: {} nodes, {} edges, node width {}, edge width {}",
            vg.n_nodes(),
            vg.n_edges(),
            vg.node_width(),
            vg.edge_width()
        );
        if order == 1 {
            for (k, r) in rows(vg.node_attrs()).iter().enumerate() {
                println!("  node {k} (edge {:?}): {r:?}", original.graph.edges()[k]);
            }
            for (k, r) in rows(vg.edge_attrs()).iter().enumerate() {
                println!("  edge {:?}: {r:?}", vg.edges()[k]);
            }
        }
    }

    let tight = SizeGuard::new(10, 10)?;
    match sgn(&original, 2, &tight) {
        Ok(_) => println!("second order fits a 10/10 guard"),
        Err(e) => println!("guard: {e}"),
    }
    Ok(())
}

//! Subgraph-network contrastive learning for graph-level representations.
//!
//! The pipeline: load a TU-format corpus ([`dataset`]), build first and
//! second order subgraph-network views by iterated attributed line graphs
//! ([`sgn`]), encode every view with its own GIN-style encoder and a shared
//! projection head ([`encoder`]), and train with NT-Xent or the fused
//! multi-order objective ([`contrastive`]). [`eval`] extracts embeddings and
//! scores them with a k-fold linear probe. Gradients come from a small
//! reverse-mode tape ([`autograd`]) that is checked against finite
//! differences.

pub mod autograd;
pub mod cli;
pub mod contrastive;
pub mod dataset;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod graph;
pub mod sgn;

#[cfg(test)]
pub(crate) mod testutil;

pub use dataset::{DatasetStats, GraphDataset};
pub use error::{Error, Result};
pub use graph::{AttributedGraph, Matrix, OpenTriangle};
pub use sgn::{SgnView, SizeGuard};

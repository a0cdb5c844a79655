use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("permutation is not a bijection on 0..{n}")]
    NotBijection { n: usize },

    #[error(
        "graph {origin} (order {order}) has {triangles} open triangles but no node attributes; \
         run degree featurization first"
    )]
    MissingNodeAttributes {
        origin: usize,
        order: usize,
        triangles: usize,
    },

    #[error("augmentation too large: graph {origin} at order {order} has {count} {what} (limit {limit})")]
    GuardExceeded {
        origin: usize,
        order: usize,
        what: &'static str,
        count: usize,
        limit: usize,
    },

    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    #[error("autograd: {0}")]
    Autograd(String),

    #[error("missing required file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{}:{line}: {msg}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "width mismatch for view order {order}: expected {expected} {what} columns, found {found}"
    )]
    WidthMismatch {
        order: usize,
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("no usable graphs: {0}")]
    NoUsableGraphs(String),

    #[error("class {class} has no members in the training split of fold {fold}; try fewer folds")]
    ClassMissing { class: usize, fold: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::ShapeMismatch {
            op,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }
}

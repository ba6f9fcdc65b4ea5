//! Minimal inference runtime: dense algebra, GRU, GraphSAGE, MLP and the
//! `M4W1` weight bundle format.
//!
//! All arithmetic is `f32` with a fixed summation order, so a forward pass is
//! bit-reproducible for identical inputs.

mod gru;
mod linalg;
mod mlp;
mod model;
mod sage;
mod weights;

pub use gru::{gru_cell, gru_rows, GruParams};
pub use linalg::{dot, Linear, Matrix};
pub use mlp::{mlp_forward, mlp_rows, MlpParams};
pub use model::{ModelDims, ModelWeights, NormConstants};
pub use sage::{sage_layer, Activation, Adjacency, SageParams};
pub use weights::{ParamArray, WeightBundle, WeightError, WEIGHT_FORMAT_VERSION, WEIGHT_MAGIC};

/// Shape mismatch in a forward pass.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NnError {
    #[error("{what}: expected dimension {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("adjacency references node {node} but the graph has {n_nodes} nodes")]
    BadAdjacency { node: usize, n_nodes: usize },
}

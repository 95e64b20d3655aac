//! Graph model inversion.
//!
//! Trains small graph neural networks (GCN, GraphSAGE, RGCN) and then
//! recovers the adjacency structure they were trained on from the model's
//! logits alone, by projected gradient descent over a relaxed adjacency.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`graph`] | graph types, Laplacians, GCN normalization, meta-path products |
//! | [`diffmat`] | reverse-mode differentiation over dense matrices |
//! | [`gnn`] | victim models, training, logits oracle, noise defense |
//! | [`attack`] | homogeneous and heterogeneous inversion attacks |
//! | [`eval`] | AUC/AP, baselines, ablation and noise experiments |
//! | [`data`] | loaders, generators, checkpoints, reports |

pub mod attack;
pub mod data;
pub mod diffmat;
pub mod error;
pub mod eval;
pub mod gnn;
pub mod graph;
pub mod linalg;

pub use error::{Error, Result};

/// Dense row-major matrix of 64-bit floats used throughout the crate.
pub type Matrix = ndarray::Array2<f64>;

/// Independent random streams derived from one user seed.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Init = 0,
    Noise = 1,
    Data = 2,
    Split = 3,
    Weights = 4,
    Sampling = 5,
}

pub(crate) fn seeded(seed: u64, stream: Stream) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

//! Self-supervised node embeddings for bipartite graphs: one-hop message
//! passing between the two node sets, distribution alignment against each
//! side's own features, and depth-by-depth cascaded training.

pub mod bench;
pub mod cascade;
pub mod error;
pub mod eval;
pub mod graph;
pub mod layers;
pub mod rng;
pub mod tensor;

pub use error::{BgnnError, Result};

//! Dense numerical core: matrices, hand-written layer gradients, Adam and
//! the sparse-dense product used for message passing. All arithmetic is `f64`.

mod matrix;
mod memory;
mod ops;
mod optim;
mod param;
mod sparse;

pub use matrix::{FeatureMatrix, Matrix};
pub use memory::{MemoryGuard, MemoryKind, MemoryTracker};
pub use ops::{
    bce_with_logits, dropout_apply, linear_backward, linear_forward, sigmoid,
    softmax_cross_entropy, softmax_rows, Activation, DropoutMask, Mode,
};
pub use optim::{adam_step, OptimizerConfig};
pub use param::{glorot_uniform, Parameter};
pub use sparse::{spmm, spmm_macs, spmm_transpose, spmm_with};

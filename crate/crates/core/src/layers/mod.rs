//! Message passing between the two partitions and the alignment objectives.

mod dense;
mod ida;
mod idmp;
mod target;

pub use dense::{discriminator_logit, Discriminator, MlpAligner, TwoLayer, TwoLayerForward};
pub use ida::{
    alignment_distance, discriminator_loss, discriminator_step, generator_loss, generator_step,
    generator_step_from, mlp_loss, mlp_step, mlp_step_from,
};
pub use idmp::{idmp_forward, IdmpForward, IdmpLayer};
pub use target::{alignment_target, principal_scores, symmetric_eigen, TargetView};

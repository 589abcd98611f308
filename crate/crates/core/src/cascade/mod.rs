//! Depth-by-depth training: each depth trains fresh layers on the frozen
//! output of the previous one, then hands its embeddings forward.

mod checkpoint;
mod config;
mod trace;
mod train;

pub use checkpoint::{read_meta, CheckpointStore, EmbeddingCheckpoint};
pub use config::{hex_digest, DirectionSchedule, FuseMode, IdaVariant, TrainConfig};
pub use trace::{DepthSummary, TraceRecord, TrainingTrace};
pub use train::{
    depth_param_bytes, sample_batches, train_cascade, train_cascade_with, train_depth,
    CascadeOptions, CascadeOutput, DepthInput, DepthOutput, DepthTrainer,
};

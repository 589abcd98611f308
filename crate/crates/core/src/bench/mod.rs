//! Scalability measurements: synthetic graphs, per-epoch timing, the
//! cascaded versus end-to-end memory comparison, and depth sweeps.

mod depth;
mod modes;
mod synthetic;
mod timing;

pub use depth::{depth_sweep, DepthPoint};
pub use modes::{compare_training_modes, train_end_to_end, ModeComparison, ModeRun};
pub use synthetic::{alignment_toy, generate_synthetic, DegreeModel, SyntheticSpec};
pub use timing::{epoch_flops, fit_line, time_epochs, BenchRecord, BenchReport};

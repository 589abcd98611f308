//! Downstream node classification, ablations and the transfer-bound check.

mod evaluate;
mod logreg;
mod metrics;
mod split;
mod transfer_bound;

pub use evaluate::{
    evaluate_embeddings, evaluate_features, evaluate_raw, run_ablation, untrained_aggregation,
    AblationConfig, AblationRow, AblationTable, EvalConfig, MetricsRecord, SeedScores, ROW_ADV,
    ROW_AGGREGATION, ROW_MLP, ROW_RAW,
};
pub use logreg::{logreg_train, ClassifierModel, LogRegConfig};
pub use metrics::{f1_scores, mean_std, F1Scores};
pub use split::{split_nodes, Split, SplitSpec};
pub use transfer_bound::{total_variation, verify_transfer_bound, BoundCheck, BoundInstance};

use serde::{Deserialize, Serialize};

use crate::cascade::{train_cascade_with, CascadeOptions, TrainConfig};
use crate::error::{BgnnError, Result};
use crate::eval::{evaluate_embeddings, EvalConfig, MetricsRecord};
use crate::graph::{BipartiteDataset, Partition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthPoint {
    pub depth_k: usize,
    pub metrics: MetricsRecord,
}

/// Downstream scores on `U` for each `K` in `k_values`.
///
/// Depth `k` of a cascade never looks at `depth_k`, so one run to the largest
/// `K` yields exactly the embeddings a separate run to each smaller `K` would.
pub fn depth_sweep(
    dataset: &BipartiteDataset,
    config: &TrainConfig,
    k_values: &[usize],
    eval: &EvalConfig,
) -> Result<Vec<DepthPoint>> {
    if dataset.labels_u().is_none() {
        return Err(BgnnError::Precondition(
            "depth sweep requires labels on U".into(),
        ));
    }
    let Some(&k_max) = k_values.iter().max() else {
        return Err(BgnnError::Validation("no depth values given".into()));
    };
    if k_values.contains(&0) {
        return Err(BgnnError::Validation(
            "depth values must be at least 1".into(),
        ));
    }
    let cfg = TrainConfig {
        depth_k: k_max,
        ..config.clone()
    };
    let options = CascadeOptions {
        keep_depths: true,
        ..CascadeOptions::default()
    };
    let out = train_cascade_with(dataset, &cfg, &options)?;
    k_values
        .iter()
        .map(|&k| {
            let z = &out.depth_embeddings[k - 1].h_u;
            let mut metrics = evaluate_embeddings(dataset, Partition::U, z, eval)?;
            metrics.config_digest = TrainConfig {
                depth_k: k,
                ..config.clone()
            }
            .digest();
            Ok(DepthPoint {
                depth_k: k,
                metrics,
            })
        })
        .collect()
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logreg::{logreg_train, LogRegConfig};
use super::metrics::{f1_scores, mean_std};
use super::split::{split_nodes, SplitSpec};
use crate::cascade::{train_cascade, IdaVariant, TrainConfig};
use crate::error::{BgnnError, Result};
use crate::graph::{rescale_columns, BipartiteDataset, LabelVector, Partition};
use crate::layers::IdmpLayer;
use crate::rng::{derive_seed, rng_for};
use crate::tensor::{Matrix, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub num_seeds: usize,
    pub base_seed: u64,
    pub split: SplitSpec,
    pub logreg: LogRegConfig,
    /// Classify `[raw features ‖ embedding]` instead of the embedding alone.
    pub concat_raw: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            num_seeds: 5,
            base_seed: 0,
            split: SplitSpec::default(),
            logreg: LogRegConfig::default(),
            concat_raw: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedScores {
    pub seed: u64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub binary_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub dataset: String,
    pub config_digest: String,
    pub feature_dim: usize,
    pub per_seed: Vec<SeedScores>,
    pub micro_mean: f64,
    pub micro_std: f64,
    pub macro_mean: f64,
    pub macro_std: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub binary_mean: Option<f64>,
}

impl MetricsRecord {
    pub fn summary(&self) -> String {
        format!(
            "micro-F1 {:.4} ± {:.4}, macro-F1 {:.4} ± {:.4} over {} seed(s)",
            self.micro_mean,
            self.micro_std,
            self.macro_mean,
            self.macro_std,
            self.per_seed.len()
        )
    }
}

/// Trains and tests a classifier on `features` for each seed. Seed `i` uses
/// split and classifier seed `base_seed + i`; seeds run in parallel but the
/// result order is fixed.
pub fn evaluate_features(
    features: &Matrix,
    labels: &LabelVector,
    cfg: &EvalConfig,
) -> Result<MetricsRecord> {
    if features.rows() != labels.len() {
        return Err(BgnnError::shape(
            "evaluate",
            format!(
                "{} feature rows for {} labels",
                features.rows(),
                labels.len()
            ),
        ));
    }
    if cfg.num_seeds == 0 {
        return Err(BgnnError::Validation("num_seeds must be at least 1".into()));
    }
    let per_seed = (0..cfg.num_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.base_seed + i;
            let split = split_nodes(labels, &cfg.split.with_seed(seed))?;
            let lr = LogRegConfig { seed, ..cfg.logreg };
            let model = logreg_train(features, labels, &split.train, &split.val, &lr)?;
            let pred = model.predict(&features.select_rows(&split.test))?;
            let truth: Vec<usize> = split
                .test
                .iter()
                .map(|&t| labels.get(t).expect("labelled"))
                .collect();
            let s = f1_scores(&pred, &truth, labels.num_classes())?;
            Ok(SeedScores {
                seed,
                micro_f1: s.micro,
                macro_f1: s.macro_,
                binary_f1: s.binary,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let micro: Vec<f64> = per_seed.iter().map(|s| s.micro_f1).collect();
    let macro_: Vec<f64> = per_seed.iter().map(|s| s.macro_f1).collect();
    let (micro_mean, micro_std) = mean_std(&micro);
    let (macro_mean, macro_std) = mean_std(&macro_);
    let binary_mean = per_seed
        .iter()
        .map(|s| s.binary_f1)
        .collect::<Option<Vec<_>>>()
        .map(|b| mean_std(&b).0);
    Ok(MetricsRecord {
        dataset: String::new(),
        config_digest: String::new(),
        feature_dim: features.cols(),
        per_seed,
        micro_mean,
        micro_std,
        macro_mean,
        macro_std,
        binary_mean,
    })
}

fn partition_labels(dataset: &BipartiteDataset, partition: Partition) -> Result<&LabelVector> {
    dataset.labels(partition).ok_or_else(|| {
        BgnnError::Precondition(format!("partition {} has no labels", partition.name()))
    })
}

/// Evaluates embeddings of one partition, optionally next to its raw features.
pub fn evaluate_embeddings(
    dataset: &BipartiteDataset,
    partition: Partition,
    embeddings: &Matrix,
    cfg: &EvalConfig,
) -> Result<MetricsRecord> {
    let labels = partition_labels(dataset, partition)?;
    if embeddings.rows() != dataset.num_nodes(partition) {
        return Err(BgnnError::shape(
            "evaluate_embeddings",
            format!(
                "{} embedding rows for {} nodes in {}",
                embeddings.rows(),
                dataset.num_nodes(partition),
                partition.name()
            ),
        ));
    }
    let x = if cfg.concat_raw {
        dataset.features(partition).hcat(embeddings)?
    } else {
        embeddings.clone()
    };
    evaluate_features(&x, labels, cfg)
}

pub fn evaluate_raw(
    dataset: &BipartiteDataset,
    partition: Partition,
    cfg: &EvalConfig,
) -> Result<MetricsRecord> {
    evaluate_features(
        dataset.features(partition),
        partition_labels(dataset, partition)?,
        cfg,
    )
}

/// Output of an untrained depth-1 message-passing layer, initialised exactly
/// as the trainer would.
pub fn untrained_aggregation(
    dataset: &BipartiteDataset,
    partition: Partition,
    config: &TrainConfig,
) -> Result<Matrix> {
    let b_hat = dataset.incidence(partition.incoming());
    let h_other = rescale_columns(dataset.features(partition.other()));
    let mut rng = rng_for(derive_seed(config.seed, "aggregation"), partition.name());
    let layer = IdmpLayer::new(
        h_other.cols(),
        config.encoder_output_dim,
        config.dropout_keep,
        config.use_bias,
        &mut rng,
        None,
    )?;
    Ok(layer
        .forward(&b_hat, &h_other, Mode::Eval, &mut rng)?
        .output)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub partition: Partition,
    pub adversarial: TrainConfig,
    pub mlp: TrainConfig,
    pub eval: EvalConfig,
}

impl AblationConfig {
    pub fn for_dataset(name: &str) -> Option<Self> {
        Some(Self {
            partition: Partition::U,
            adversarial: TrainConfig::preset(name, IdaVariant::Adversarial)?,
            mlp: TrainConfig::preset(name, IdaVariant::Mlp)?,
            eval: EvalConfig::default(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub metrics: MetricsRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn get(&self, name: &str) -> Option<&MetricsRecord> {
        self.rows
            .iter()
            .find(|r| r.name == name)
            .map(|r| &r.metrics)
    }

    pub fn to_text(&self) -> String {
        let w = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .max()
            .unwrap_or(0)
            .max(6);
        let mut s = format!("{:<w$}  {:>16}  {:>16}\n", "method", "micro-F1", "macro-F1");
        for r in &self.rows {
            let m = &r.metrics;
            s.push_str(&format!(
                "{:<w$}  {:>7.4} ± {:<6.4}  {:>7.4} ± {:<6.4}\n",
                r.name, m.micro_mean, m.micro_std, m.macro_mean, m.macro_std
            ));
        }
        s
    }
}

pub const ROW_RAW: &str = "raw features";
pub const ROW_AGGREGATION: &str = "feature aggregation";
pub const ROW_MLP: &str = "BGNN-MLP";
pub const ROW_ADV: &str = "BGNN-Adv";

/// Raw features, untrained aggregation (alone), and the two trained variants,
/// all on the same splits.
pub fn run_ablation(dataset: &BipartiteDataset, cfg: &AblationConfig) -> Result<AblationTable> {
    let p = cfg.partition;
    let raw = evaluate_raw(dataset, p, &cfg.eval)?;
    let agg = untrained_aggregation(dataset, p, &cfg.adversarial)?;
    let agg = evaluate_embeddings(
        dataset,
        p,
        &agg,
        &EvalConfig {
            concat_raw: false,
            ..cfg.eval
        },
    )?;
    let mut rows = vec![
        AblationRow {
            name: ROW_RAW.into(),
            metrics: raw,
        },
        AblationRow {
            name: ROW_AGGREGATION.into(),
            metrics: agg,
        },
    ];
    for (name, tc) in [(ROW_MLP, &cfg.mlp), (ROW_ADV, &cfg.adversarial)] {
        let out = train_cascade(dataset, tc)?;
        let z = match p {
            Partition::U => &out.z_u,
            Partition::V => &out.z_v,
        };
        let mut metrics = evaluate_embeddings(dataset, p, z, &cfg.eval)?;
        metrics.config_digest = tc.digest();
        rows.push(AblationRow {
            name: name.into(),
            metrics,
        });
    }
    Ok(AblationTable { rows })
}

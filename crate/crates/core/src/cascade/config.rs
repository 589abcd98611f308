use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BgnnError, Result};
use crate::tensor::OptimizerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdaVariant {
    Adversarial,
    Mlp,
}

/// What a depth hands to the next one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuseMode {
    /// Only the aligned aggregate: the width stays at the encoder dimension.
    AlignedOnly,
    /// `[H^(k) ‖ aggregate]`: the width grows by the encoder dimension.
    ConcatInput,
}

/// Which partition each epoch trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSchedule {
    /// Odd epochs train U ← V, even epochs V ← U.
    EpochAlternating,
    /// Every epoch trains both directions, U first.
    BothEachEpoch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub depth_k: usize,
    pub batch_size: usize,
    pub epochs_per_depth: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout_keep: f64,
    pub encoder_output_dim: usize,
    pub disc_hidden_dim: usize,
    pub decoder_hidden_dim: usize,
    pub ida_variant: IdaVariant,
    pub d_steps_per_g_step: usize,
    pub seed: u64,
    pub fuse_mode: FuseMode,
    pub direction_schedule: DirectionSchedule,
    pub use_bias: bool,
    /// Keep training past `epochs_per_depth` until the moving average of the
    /// alignment loss stops changing (or `max_epochs_per_depth` is reached).
    pub plateau_gate: bool,
    pub plateau_window: usize,
    pub plateau_tolerance: f64,
    pub max_epochs_per_depth: usize,
    pub parallel_spmm: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::cora_adversarial()
    }
}

impl TrainConfig {
    fn base(
        batch_size: usize,
        epochs_per_depth: usize,
        learning_rate: f64,
        weight_decay: f64,
        dropout: f64,
        encoder_output_dim: usize,
        ida_variant: IdaVariant,
    ) -> Self {
        Self {
            depth_k: 2,
            batch_size,
            epochs_per_depth,
            learning_rate,
            weight_decay,
            dropout_keep: 1.0 - dropout,
            encoder_output_dim,
            disc_hidden_dim: 32,
            decoder_hidden_dim: 16,
            ida_variant,
            d_steps_per_g_step: 1,
            seed: 0,
            fuse_mode: FuseMode::AlignedOnly,
            direction_schedule: DirectionSchedule::EpochAlternating,
            use_bias: true,
            plateau_gate: false,
            plateau_window: 20,
            plateau_tolerance: 1e-3,
            max_epochs_per_depth: 20,
            parallel_spmm: false,
        }
    }

    pub fn cora_adversarial() -> Self {
        Self::base(400, 2, 4e-4, 1e-3, 0.35, 24, IdaVariant::Adversarial)
    }

    pub fn cora_mlp() -> Self {
        Self::base(128, 5, 1e-3, 8e-4, 0.2, 48, IdaVariant::Mlp)
    }

    pub fn citeseer_adversarial() -> Self {
        Self::base(400, 4, 4e-4, 1e-3, 0.35, 16, IdaVariant::Adversarial)
    }

    pub fn citeseer_mlp() -> Self {
        Self::base(64, 3, 1e-3, 5e-4, 0.2, 48, IdaVariant::Mlp)
    }

    pub fn pubmed_adversarial() -> Self {
        Self::base(700, 3, 4e-4, 5e-4, 0.35, 24, IdaVariant::Adversarial)
    }

    pub fn pubmed_mlp() -> Self {
        Self::base(128, 3, 1e-4, 5e-3, 0.2, 48, IdaVariant::Mlp)
    }

    pub fn large_adversarial() -> Self {
        Self::base(600, 2, 4e-4, 5e-4, 0.4, 16, IdaVariant::Adversarial)
    }

    pub fn large_mlp() -> Self {
        Self::base(500, 3, 3e-4, 1e-3, 0.4, 24, IdaVariant::Mlp)
    }

    /// Hyperparameter preset by dataset name (`cora`, `citeseer`, `pubmed`,
    /// `large`).
    pub fn preset(dataset: &str, variant: IdaVariant) -> Option<Self> {
        Some(match (dataset, variant) {
            ("cora", IdaVariant::Adversarial) => Self::cora_adversarial(),
            ("cora", IdaVariant::Mlp) => Self::cora_mlp(),
            ("citeseer", IdaVariant::Adversarial) => Self::citeseer_adversarial(),
            ("citeseer", IdaVariant::Mlp) => Self::citeseer_mlp(),
            ("pubmed", IdaVariant::Adversarial) => Self::pubmed_adversarial(),
            ("pubmed", IdaVariant::Mlp) => Self::pubmed_mlp(),
            ("large", IdaVariant::Adversarial) => Self::large_adversarial(),
            ("large", IdaVariant::Mlp) => Self::large_mlp(),
            _ => return None,
        })
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig::adam(self.learning_rate, self.weight_decay)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(BgnnError::Validation(msg));
        if self.depth_k < 1 {
            return fail("depth_k must be at least 1".into());
        }
        if self.batch_size < 2 {
            return fail(format!(
                "batch_size must be at least 2, got {}",
                self.batch_size
            ));
        }
        if self.epochs_per_depth < 1 {
            return fail("epochs_per_depth must be at least 1".into());
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return fail(format!(
                "dropout_keep must be in (0, 1], got {}",
                self.dropout_keep
            ));
        }
        if self.encoder_output_dim == 0 || self.disc_hidden_dim == 0 || self.decoder_hidden_dim == 0
        {
            return fail("layer widths must be positive".into());
        }
        if self.d_steps_per_g_step == 0 {
            return fail("d_steps_per_g_step must be at least 1".into());
        }
        if self.plateau_gate
            && (self.plateau_window == 0 || self.max_epochs_per_depth < self.epochs_per_depth)
        {
            return fail(
                "plateau gate needs a window and max_epochs_per_depth >= epochs_per_depth".into(),
            );
        }
        self.optimizer().validate()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex_digest(json.as_bytes())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

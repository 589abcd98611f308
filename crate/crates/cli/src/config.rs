//! Run configuration: preset, then config file, then explicit flags.

use std::path::{Path, PathBuf};

use bgnn_core::cascade::{hex_digest, DirectionSchedule, FuseMode, IdaVariant, TrainConfig};
use bgnn_core::eval::{EvalConfig, LogRegConfig, SplitSpec};
use clap::parser::ValueSource;
use clap::ArgMatches;
use serde::{Deserialize, Serialize};

use crate::args::{Fuse, Ida, Schedule, TrainFlags};
use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub data: DataSection,
    pub train: Option<toml::Table>,
    pub split: Option<SplitSpec>,
    pub eval: Option<EvalSection>,
    pub bench: Option<BenchSection>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// Dataset directory, relative to the config file.
    pub dataset: Option<PathBuf>,
    /// Hyperparameter preset name.
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub num_seeds: usize,
    pub base_seed: u64,
    pub concat_raw: bool,
    pub logreg: LogRegConfig,
}

impl Default for EvalSection {
    fn default() -> Self {
        let e = EvalConfig::default();
        Self {
            num_seeds: e.num_seeds,
            base_seed: e.base_seed,
            concat_raw: e.concat_raw,
            logreg: e.logreg,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub mem_budget_bytes: Option<usize>,
    pub warmup: Option<usize>,
    pub timed: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        if let Some(t) = &cfg.train {
            // reject unknown or mistyped keys now, before any overlay
            TrainConfig::deserialize(toml::Value::Table(t.clone())).map_err(|e| {
                CliError::Usage(format!("invalid config {} [train]: {e}", path.display()))
            })?;
        }
        if let Some(d) = &cfg.data.dataset {
            if d.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.data.dataset = Some(base.join(d));
            }
        }
        Ok(cfg)
    }
}

/// What the config file and command line resolved to; serialized next to
/// every output so a run can be repeated.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub dataset: Option<PathBuf>,
    pub preset: String,
    pub train: TrainConfig,
    pub split: SplitSpec,
    pub eval: EvalSection,
}

impl Resolved {
    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            num_seeds: self.eval.num_seeds,
            base_seed: self.eval.base_seed,
            split: self.split,
            logreg: self.eval.logreg,
            concat_raw: self.eval.concat_raw,
        }
    }

    /// SHA-256 over the canonical JSON form.
    pub fn digest(&self) -> String {
        hex_digest(serde_json::to_string(self).expect("plain data").as_bytes())
    }
}

fn explicit(m: &ArgMatches, id: &str) -> bool {
    matches!(m.value_source(id), Some(ValueSource::CommandLine))
}

fn variant(ida: Ida) -> IdaVariant {
    match ida {
        Ida::Adversarial => IdaVariant::Adversarial,
        Ida::Mlp => IdaVariant::Mlp,
    }
}

/// How a command wants its training configuration resolved.
#[derive(Debug, Clone, Copy)]
pub struct ResolveOpts {
    /// Preset used when neither the flag nor the file names one.
    pub default_preset: &'static str,
    /// Forces the alignment variant regardless of flags and file.
    pub force_ida: Option<IdaVariant>,
}

impl Default for ResolveOpts {
    fn default() -> Self {
        Self {
            default_preset: "cora",
            force_ida: None,
        }
    }
}

/// Preset for the chosen variant, overlaid with the file's `[train]` keys,
/// overlaid with explicitly given flags.
pub fn resolve(
    m: &ArgMatches,
    flags: &TrainFlags,
    file: &FileConfig,
    seed: u64,
    opts: ResolveOpts,
) -> Result<Resolved, CliError> {
    let preset = if explicit(m, "preset") {
        flags.preset.name().to_string()
    } else {
        file.data
            .preset
            .clone()
            .unwrap_or_else(|| opts.default_preset.to_string())
    };
    let file_train = file.train.clone().unwrap_or_default();
    let ida = if let Some(v) = opts.force_ida {
        v
    } else if explicit(m, "ida") {
        variant(flags.ida)
    } else {
        match file_train.get("ida_variant").and_then(|v| v.as_str()) {
            Some("mlp") => IdaVariant::Mlp,
            _ => variant(flags.ida),
        }
    };
    let base = TrainConfig::preset(&preset, ida).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown preset `{preset}` (cora, citeseer, pubmed, large)"
        ))
    })?;

    let mut table = match toml::Value::try_from(&base) {
        Ok(toml::Value::Table(t)) => t,
        _ => unreachable!("TrainConfig serializes to a table"),
    };
    for (k, v) in &file_train {
        table.insert(k.clone(), v.clone());
    }
    let mut train = TrainConfig::deserialize(toml::Value::Table(table))
        .map_err(|e| CliError::Usage(format!("invalid [train] section: {e}")))?;
    train.ida_variant = ida;

    if explicit(m, "depth") {
        train.depth_k = flags.depth;
    }
    if explicit(m, "batch_size") {
        train.batch_size = flags.batch_size;
    }
    if explicit(m, "epochs") {
        train.epochs_per_depth = flags.epochs;
    }
    if explicit(m, "lr") {
        train.learning_rate = flags.lr;
    }
    if explicit(m, "weight_decay") {
        train.weight_decay = flags.weight_decay;
    }
    if explicit(m, "dropout") {
        train.dropout_keep = 1.0 - flags.dropout;
    }
    if explicit(m, "dim") {
        train.encoder_output_dim = flags.dim;
    }
    if explicit(m, "d_steps") {
        train.d_steps_per_g_step = flags.d_steps;
    }
    if explicit(m, "fuse_mode") {
        train.fuse_mode = match flags.fuse_mode {
            Fuse::AlignedOnly => FuseMode::AlignedOnly,
            Fuse::ConcatInput => FuseMode::ConcatInput,
        };
    }
    if explicit(m, "schedule") {
        train.direction_schedule = match flags.schedule {
            Schedule::EpochAlternating => DirectionSchedule::EpochAlternating,
            Schedule::BothEachEpoch => DirectionSchedule::BothEachEpoch,
        };
    }
    if flags.parallel_spmm {
        train.parallel_spmm = true;
    }
    let mut eval = file.eval.unwrap_or_default();
    if explicit(m, "seed") || !file_train.contains_key("seed") {
        train.seed = seed;
    }
    if explicit(m, "seed") {
        eval.base_seed = seed;
    }
    train
        .validate()
        .map_err(|e| CliError::Usage(format!("invalid training configuration: {e}")))?;
    let dataset = flags.dataset.clone().or_else(|| file.data.dataset.clone());
    Ok(Resolved {
        dataset,
        preset,
        train,
        split: file.split.unwrap_or_default(),
        eval,
    })
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bgnn",
    version,
    about = "Bipartite graph embeddings with cascaded layer-wise training"
)]
pub struct Cli {
    /// Run configuration (TOML with [data], [train], [split], [eval], [bench] sections).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Root seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

/// Preset hyperparameters, as printed under `--help`.
pub const PRESET_TABLE: &str = "\
Presets (--preset, with --ida picking the row):
  preset    ida          batch  epochs  lr      weight_decay  dropout  dim
  cora      adversarial  400    2       4e-4    1e-3          0.35     24
  cora      mlp          128    5       1e-3    8e-4          0.2      48
  citeseer  adversarial  400    4       4e-4    1e-3          0.35     16
  citeseer  mlp          64     3       1e-3    5e-4          0.2      48
  pubmed    adversarial  700    3       4e-4    5e-4          0.35     24
  pubmed    mlp          128    3       1e-4    5e-3          0.2      48
  large     adversarial  600    2       4e-4    5e-4          0.4      16
  large     mlp          500    3       3e-4    1e-3          0.4      24
All presets: depth 2, one discriminator step per generator step.
Bench scaling and modes default to the large preset.";

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a bipartite dataset from a citation network or a synthetic spec.
    Synth(SynthArgs),
    /// Train a cascade and write embeddings, checkpoints and the trace.
    #[command(after_help = PRESET_TABLE)]
    Train(TrainArgs),
    /// Score embeddings with logistic regression, or run the ablation table.
    #[command(after_help = PRESET_TABLE)]
    Eval(EvalArgs),
    /// Scalability and depth measurements.
    #[command(after_help = PRESET_TABLE)]
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StandIn {
    Cora,
    Citeseer,
}

impl StandIn {
    pub fn name(self) -> &'static str {
        match self {
            StandIn::Cora => "cora",
            StandIn::Citeseer => "citeseer",
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory holding a LINQS-format `*.content` and `*.cites` pair.
    #[arg(long, value_name = "DIR", conflicts_with_all = ["standin", "synthetic_edges"])]
    pub input: Option<PathBuf>,

    /// Generate a citation network with the named dataset's statistics instead of reading one.
    #[arg(long, value_enum, conflicts_with = "synthetic_edges")]
    pub standin: Option<StandIn>,

    /// Generate a synthetic user–item graph with this many edges.
    #[arg(long, value_name = "N", value_parser = parse_count)]
    pub synthetic_edges: Option<usize>,

    /// Features kept on the V side (leading columns).
    #[arg(long, default_value_t = 1000)]
    pub v_keep: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ida {
    Adversarial,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fuse {
    AlignedOnly,
    ConcatInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Schedule {
    EpochAlternating,
    BothEachEpoch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Cora,
    Citeseer,
    Pubmed,
    Large,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Cora => "cora",
            Preset::Citeseer => "citeseer",
            Preset::Pubmed => "pubmed",
            Preset::Large => "large",
        }
    }
}

/// Hyperparameters. A flag given on the command line beats the config file,
/// which beats the preset. Defaults shown are the `cora` preset.
#[derive(Debug, Clone, Args)]
pub struct TrainFlags {
    /// Dataset directory (edges.tsv, features_u.txt, ...).
    #[arg(long, value_name = "DIR")]
    pub dataset: Option<PathBuf>,

    /// Hyperparameter preset.
    #[arg(long, value_enum, default_value = "cora")]
    pub preset: Preset,

    /// Alignment variant.
    #[arg(long, value_enum, default_value = "adversarial")]
    pub ida: Ida,

    /// Number of cascaded depths K.
    #[arg(long, default_value_t = 2)]
    pub depth: usize,

    #[arg(long, default_value_t = 400)]
    pub batch_size: usize,

    /// Epochs per depth.
    #[arg(long, default_value_t = 2)]
    pub epochs: usize,

    #[arg(long, default_value_t = 4e-4)]
    pub lr: f64,

    #[arg(long, default_value_t = 1e-3)]
    pub weight_decay: f64,

    /// Dropout rate on the aggregated side's input.
    #[arg(long, default_value_t = 0.35)]
    pub dropout: f64,

    /// Encoder output dimension.
    #[arg(long, default_value_t = 24)]
    pub dim: usize,

    /// Discriminator steps per generator step.
    #[arg(long, default_value_t = 1)]
    pub d_steps: usize,

    #[arg(long, value_enum, default_value = "aligned-only")]
    pub fuse_mode: Fuse,

    #[arg(long, value_enum, default_value = "epoch-alternating")]
    pub schedule: Schedule,

    /// Row-parallel sparse products.
    #[arg(long)]
    pub parallel_spmm: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    U,
    V,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Embedding file to score (one row per node of the chosen partition).
    #[arg(long, value_name = "FILE", required_unless_present = "ablation")]
    pub embeddings: Option<PathBuf>,

    /// Train raw, aggregation, MLP and adversarial variants and tabulate them.
    #[arg(long)]
    pub ablation: bool,

    /// Number of split/classifier seeds.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,

    #[arg(long, value_enum, default_value = "u")]
    pub partition: Side,

    /// Score the embeddings alone instead of next to the raw features.
    #[arg(long)]
    pub no_raw: bool,

    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(subcommand)]
    pub which: BenchCommand,
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Per-epoch wall time and flop count over synthetic graphs of growing size.
    #[command(after_help = PRESET_TABLE)]
    Scaling(ScalingArgs),
    /// Cascaded versus end-to-end peak memory, optionally under a budget.
    #[command(after_help = PRESET_TABLE)]
    Modes(ModesArgs),
    /// Downstream F1 for several depths.
    #[command(after_help = PRESET_TABLE)]
    Depth(DepthArgs),
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    /// Edge counts, comma separated (scientific notation accepted).
    #[arg(long, value_delimiter = ',', value_parser = parse_count, default_value = "1e4,1e5,1e6")]
    pub edges: Vec<usize>,

    #[arg(long, default_value_t = 1)]
    pub warmup: usize,

    #[arg(long, default_value_t = 3)]
    pub timed: usize,

    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct ModesArgs {
    /// Synthetic graph size when no --dataset is given.
    #[arg(long, value_parser = parse_count, default_value = "1e5")]
    pub edges: usize,

    /// Refuse allocations past this many accounted bytes.
    #[arg(long, value_name = "BYTES", value_parser = parse_count)]
    pub mem_budget_bytes: Option<usize>,

    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct DepthArgs {
    /// Depths to evaluate, comma separated.
    #[arg(long = "k", value_delimiter = ',', default_value = "1,2,3,4")]
    pub k: Vec<usize>,

    /// Generate this citation stand-in when no --dataset is given.
    #[arg(long, value_enum, default_value = "cora")]
    pub standin: StandIn,

    #[arg(long, default_value_t = 5)]
    pub seeds: usize,

    #[command(flatten)]
    pub train: TrainFlags,
}

/// Non-negative integer, also written as `1e5` or `100_000`.
pub fn parse_count(s: &str) -> Result<usize, String> {
    let t = s.trim().replace('_', "");
    if let Ok(n) = t.parse::<usize>() {
        return Ok(n);
    }
    match t.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1e18 => Ok(x as usize),
        _ => Err(format!("`{s}` is not a non-negative whole number")),
    }
}

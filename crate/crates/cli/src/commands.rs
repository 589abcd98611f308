use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use bgnn_core::bench::{
    compare_training_modes, depth_sweep, generate_synthetic, time_epochs, BenchReport,
    SyntheticSpec,
};
use bgnn_core::cascade::{train_cascade_with, CascadeOptions, CheckpointStore, IdaVariant};
use bgnn_core::eval::{evaluate_embeddings, run_ablation, AblationConfig};
use bgnn_core::graph::{
    load_dataset_dir, load_embeddings, load_linqs_dir, save_dataset, save_embeddings,
    synthesize_bipartite, write_remap, BipartiteDataset, CitationNetwork, CitationStandIn,
    DatasetFiles, LabelVector, Partition,
};
use clap::parser::ValueSource;
use clap::ArgMatches;
use serde::Serialize;

use crate::args::{BenchCommand, Cli, Command, EvalArgs, Side, SynthArgs, TrainArgs};
use crate::config::{resolve, FileConfig, ResolveOpts, Resolved};
use crate::CliError;

type CliResult<T> = Result<T, CliError>;

/// Deepest subcommand's matches, where the flattened flags live.
fn leaf(mut m: &ArgMatches) -> &ArgMatches {
    while let Some((_, sub)) = m.subcommand() {
        m = sub;
    }
    m
}

fn explicit(m: &ArgMatches, id: &str) -> bool {
    matches!(m.value_source(id), Some(ValueSource::CommandLine))
}

pub fn dispatch(cli: &Cli, matches: &ArgMatches) -> CliResult<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let m = leaf(matches);
    std::fs::create_dir_all(&cli.out).map_err(|e| {
        CliError::Usage(format!(
            "cannot create output directory {}: {e}",
            cli.out.display()
        ))
    })?;
    let log = RunLog::open(&cli.out)?;
    log.line(&format!(
        "start {}",
        std::env::args().collect::<Vec<_>>().join(" ")
    ))?;
    let result = match &cli.command {
        Command::Synth(a) => synth(cli, a),
        Command::Train(a) => train(cli, m, a, &file),
        Command::Eval(a) => eval(cli, m, a, &file),
        Command::Bench(b) => match &b.which {
            BenchCommand::Scaling(a) => {
                let r = resolve(m, &a.train, &file, cli.seed, large())?;
                let bench = file.bench.unwrap_or_default();
                let warmup = if explicit(m, "warmup") {
                    a.warmup
                } else {
                    bench.warmup.unwrap_or(a.warmup)
                };
                let timed = if explicit(m, "timed") {
                    a.timed
                } else {
                    bench.timed.unwrap_or(a.timed)
                };
                bench_scaling(cli, &r, &a.edges, warmup, timed)
            }
            BenchCommand::Modes(a) => {
                let r = resolve(m, &a.train, &file, cli.seed, large())?;
                let budget = a
                    .mem_budget_bytes
                    .or(file.bench.and_then(|b| b.mem_budget_bytes));
                bench_modes(cli, &r, a.edges, budget)
            }
            BenchCommand::Depth(a) => {
                let mut r = resolve(m, &a.train, &file, cli.seed, ResolveOpts::default())?;
                if explicit(m, "seeds") || file.eval.is_none() {
                    r.eval.num_seeds = a.seeds;
                }
                let ds = match &r.dataset {
                    Some(d) => open_dataset(d)?,
                    None => standin_dataset(a.standin.name(), cli.seed, 1000)?,
                };
                bench_depth(cli, &r, &ds, &a.k)
            }
        },
    };
    match &result {
        Ok(()) => log.line("end ok")?,
        Err(e) => log.line(&format!("end error: {e}"))?,
    }
    result
}

fn large() -> ResolveOpts {
    ResolveOpts {
        default_preset: "large",
        ..ResolveOpts::default()
    }
}

/// Wall-clock log kept apart from every other output so that those stay
/// byte-identical between runs.
struct RunLog {
    path: PathBuf,
}

impl RunLog {
    fn open(out: &Path) -> CliResult<Self> {
        Ok(Self {
            path: out.join("run.log"),
        })
    }

    fn line(&self, msg: &str) -> CliResult<()> {
        let t = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .unwrap_or_default();
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| io_err(&self.path, e))?;
        writeln!(f, "{}.{:03} {msg}", t.as_secs(), t.subsec_millis())
            .map_err(|e| io_err(&self.path, e))
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(bgnn_core::BgnnError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn require(path: &Path, what: &str) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "{what} not found: {}",
            path.display()
        )))
    }
}

/// Loads a directory written by `bgnn synth`, naming the first missing file.
pub fn open_dataset(dir: &Path) -> CliResult<BipartiteDataset> {
    require(dir, "dataset directory")?;
    let f = DatasetFiles::in_dir(dir);
    for p in [&f.edges, &f.features_u, &f.features_v] {
        require(p, "dataset file")?;
    }
    let (ds, report) = load_dataset_dir(dir)?;
    if report.duplicate_edges > 0 {
        log::warn!("{} duplicate edges dropped", report.duplicate_edges);
    }
    Ok(ds)
}

/// Bipartite dataset built from a generated citation network with the
/// named dataset's statistics.
pub fn standin_dataset(name: &str, seed: u64, v_keep: usize) -> CliResult<BipartiteDataset> {
    let spec = CitationStandIn::by_name(name)
        .ok_or_else(|| CliError::Usage(format!("no stand-in named `{name}`")))?;
    to_bipartite(&spec.generate(seed)?, seed, v_keep)
}

/// Bipartite dataset synthesized from a LINQS-format citation network.
pub fn linqs_dataset(dir: &Path, seed: u64, v_keep: usize) -> CliResult<BipartiteDataset> {
    require(dir, "input directory")?;
    to_bipartite(&load_linqs_dir(dir)?, seed, v_keep)
}

fn to_bipartite(net: &CitationNetwork, seed: u64, v_keep: usize) -> CliResult<BipartiteDataset> {
    let labels = LabelVector::from_dense(&net.labels)?;
    let keep = v_keep.min(net.features.cols());
    Ok(synthesize_bipartite(&net.edges, &net.features, &labels, keep, seed)?.dataset)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).expect("plain data");
    s.push('\n');
    std::fs::write(path, s).map_err(|e| io_err(path, e))
}

fn write_text(text: &str, path: &Path) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn synth(cli: &Cli, a: &SynthArgs) -> CliResult<()> {
    let out = &cli.out;
    if let Some(n) = a.synthetic_edges {
        let ds = generate_synthetic(&SyntheticSpec::scaled(n, cli.seed))?;
        save_dataset(&ds, out)?;
        println!(
            "wrote synthetic graph to {}: |U| {} |V| {} |E| {}",
            out.display(),
            ds.num_u(),
            ds.num_v(),
            ds.num_edges()
        );
        return Ok(());
    }
    let net = match (&a.input, a.standin) {
        (Some(dir), _) => {
            require(dir, "input directory")?;
            load_linqs_dir(dir)?
        }
        (None, Some(s)) => CitationStandIn::by_name(s.name())
            .expect("known stand-in")
            .generate(cli.seed)?,
        (None, None) => {
            return Err(CliError::Usage(
                "synth needs one of --input DIR, --standin NAME or --synthetic-edges N".into(),
            ))
        }
    };
    let labels = LabelVector::from_dense(&net.labels)?;
    let keep = a.v_keep.min(net.features.cols());
    let sb = synthesize_bipartite(&net.edges, &net.features, &labels, keep, cli.seed)?;
    let files = save_dataset(&sb.dataset, out)?;
    let ids = |remap: &[usize]| -> Vec<String> {
        remap.iter().map(|&o| net.node_ids[o].clone()).collect()
    };
    write_remap(&ids(&sb.remap_u), &files.remap_u)?;
    write_remap(&ids(&sb.remap_v), &files.remap_v)?;
    let ds = &sb.dataset;
    println!(
        "wrote bipartite dataset to {}: |U| {} |V| {} |E| {}, features {} / {}",
        out.display(),
        ds.num_u(),
        ds.num_v(),
        ds.num_edges(),
        ds.features_u().cols(),
        ds.features_v().cols()
    );
    Ok(())
}

fn dataset_of(r: &Resolved) -> CliResult<BipartiteDataset> {
    let dir = r.dataset.as_ref().ok_or_else(|| {
        CliError::Usage("no dataset given (use --dataset or [data] dataset)".into())
    })?;
    open_dataset(dir)
}

#[derive(Serialize)]
struct ConfigRecord<'a> {
    digest: String,
    train_digest: String,
    #[serde(flatten)]
    resolved: &'a Resolved,
}

fn write_config(r: &Resolved, path: &Path) -> CliResult<()> {
    write_json(
        &ConfigRecord {
            digest: r.digest(),
            train_digest: r.train.digest(),
            resolved: r,
        },
        path,
    )
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    depths: &'a [bgnn_core::cascade::DepthSummary],
    peak_param_bytes: usize,
    peak_total_bytes: usize,
    z_u_shape: (usize, usize),
    z_v_shape: (usize, usize),
}

fn train(cli: &Cli, m: &ArgMatches, a: &TrainArgs, file: &FileConfig) -> CliResult<()> {
    let r = resolve(m, &a.train, file, cli.seed, ResolveOpts::default())?;
    let ds = dataset_of(&r)?;
    let out = &cli.out;
    let ckpt = out.join("checkpoints");
    std::fs::create_dir_all(&ckpt).map_err(|e| io_err(&ckpt, e))?;
    write_config(&r, &out.join("config.json"))?;
    let options = CascadeOptions {
        store: CheckpointStore::Dir(ckpt),
        ..CascadeOptions::default()
    };
    let res = train_cascade_with(&ds, &r.train, &options)?;
    save_embeddings(&res.z_u, &out.join("z_u.txt"))?;
    save_embeddings(&res.z_v, &out.join("z_v.txt"))?;
    res.trace.write_jsonl(&out.join("trace.jsonl"))?;
    res.trace.write_timing(&out.join("trace_timing.csv"))?;
    write_json(
        &TrainSummary {
            depths: &res.trace.depths,
            peak_param_bytes: res.peak_param_bytes,
            peak_total_bytes: res.peak_total_bytes,
            z_u_shape: res.z_u.shape(),
            z_v_shape: res.z_v.shape(),
        },
        &out.join("summary.json"),
    )?;
    for d in &res.trace.depths {
        println!(
            "depth {}: {} epochs, alignment U {:.4} -> {:.4}, V {:.4} -> {:.4}",
            d.depth,
            d.epochs,
            d.initial_alignment_u,
            d.final_alignment_u,
            d.initial_alignment_v,
            d.final_alignment_v
        );
    }
    println!(
        "embeddings U {:?}, V {:?}; peak parameter bytes {}; written to {}",
        res.z_u.shape(),
        res.z_v.shape(),
        res.peak_param_bytes,
        out.display()
    );
    Ok(())
}

fn partition(s: Side) -> Partition {
    match s {
        Side::U => Partition::U,
        Side::V => Partition::V,
    }
}

fn eval(cli: &Cli, m: &ArgMatches, a: &EvalArgs, file: &FileConfig) -> CliResult<()> {
    let mut r = resolve(m, &a.train, file, cli.seed, ResolveOpts::default())?;
    if explicit(m, "seeds") || file.eval.is_none() {
        r.eval.num_seeds = a.seeds;
    }
    if a.no_raw {
        r.eval.concat_raw = false;
    }
    let p = partition(a.partition);
    let ds = dataset_of(&r)?;
    let name = r
        .dataset
        .as_ref()
        .and_then(|d| d.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let out = &cli.out;
    if a.ablation {
        let mlp = resolve(
            m,
            &a.train,
            file,
            cli.seed,
            ResolveOpts {
                force_ida: Some(IdaVariant::Mlp),
                ..ResolveOpts::default()
            },
        )?;
        let adv = resolve(
            m,
            &a.train,
            file,
            cli.seed,
            ResolveOpts {
                force_ida: Some(IdaVariant::Adversarial),
                ..ResolveOpts::default()
            },
        )?;
        let cfg = AblationConfig {
            partition: p,
            adversarial: adv.train,
            mlp: mlp.train,
            eval: r.eval_config(),
        };
        let mut table = run_ablation(&ds, &cfg)?;
        for row in &mut table.rows {
            row.metrics.dataset = name.clone();
        }
        write_json(&table, &out.join("ablation.json"))?;
        let text = table.to_text();
        write_text(&text, &out.join("ablation.txt"))?;
        print!("{text}");
        return Ok(());
    }
    let path = a
        .embeddings
        .as_ref()
        .expect("clap requires --embeddings without --ablation");
    require(path, "embedding file")?;
    let z = load_embeddings(path)?;
    let mut metrics = evaluate_embeddings(&ds, p, &z, &r.eval_config())?;
    metrics.dataset = name;
    metrics.config_digest = r.digest();
    write_json(&metrics, &out.join("metrics.json"))?;
    println!("{}", metrics.summary());
    Ok(())
}

fn threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn bench_scaling(
    cli: &Cli,
    r: &Resolved,
    edges: &[usize],
    warmup: usize,
    timed: usize,
) -> CliResult<()> {
    let mut records = Vec::with_capacity(edges.len());
    for &e in edges {
        let ds = generate_synthetic(&SyntheticSpec::scaled(e, cli.seed))?;
        let rec = time_epochs(&ds, &r.train, warmup, timed)?;
        log::info!("|E| = {e}: {:.3} ms per epoch", rec.epoch_wall_ms);
        records.push(rec);
    }
    let report = BenchReport::new(records, threads());
    let out = &cli.out;
    report.write_jsonl(&out.join("bench_scaling.jsonl"))?;
    report.write_csv(&out.join("bench_scaling.csv"))?;
    let mut text = report.to_text();
    let _ = writeln!(text, "flop count linear in |E|: {}", report.flops_linear());
    write_text(&text, &out.join("bench_scaling.txt"))?;
    print!("{text}");
    Ok(())
}

fn bench_modes(cli: &Cli, r: &Resolved, edges: usize, budget: Option<usize>) -> CliResult<()> {
    let ds = match &r.dataset {
        Some(d) => open_dataset(d)?,
        None => generate_synthetic(&SyntheticSpec::scaled(edges, cli.seed))?,
    };
    let cmp = compare_training_modes(&ds, &r.train, budget)?;
    write_json(&cmp, &cli.out.join("bench_modes.json"))?;
    let text = cmp.to_text();
    write_text(&text, &cli.out.join("bench_modes.txt"))?;
    print!("{text}");
    Ok(())
}

fn bench_depth(cli: &Cli, r: &Resolved, ds: &BipartiteDataset, ks: &[usize]) -> CliResult<()> {
    let points = depth_sweep(ds, &r.train, ks, &r.eval_config())?;
    let mut jsonl = String::new();
    let mut csv = String::from("k,micro_f1,micro_std,macro_f1,macro_std\n");
    for p in &points {
        jsonl.push_str(&serde_json::to_string(p).expect("plain data"));
        jsonl.push('\n');
        let m = &p.metrics;
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            p.depth_k, m.micro_mean, m.micro_std, m.macro_mean, m.macro_std
        );
        println!("K = {}: {}", p.depth_k, m.summary());
    }
    write_text(&jsonl, &cli.out.join("bench_depth.jsonl"))?;
    write_text(&csv, &cli.out.join("bench_depth.csv"))?;
    Ok(())
}

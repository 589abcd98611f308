//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! The citation experiments use real LINQS data when `BGNN_DATA_DIR` holds
//! `cora/` and `citeseer/` directories, and the seeded stand-ins otherwise.
//! A FAIL is reported, not raised: the process exits 0 unless the harness
//! itself breaks, so `cargo test` stays usable while the report stays honest.

#[path = "../../core/tests/common/numeric_checks.rs"]
#[allow(dead_code)]
mod numeric_checks;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use bgnn_cli::commands::{linqs_dataset, standin_dataset};
use bgnn_core::bench::{
    alignment_toy, compare_training_modes, depth_sweep, generate_synthetic, time_epochs,
};
use bgnn_core::bench::{BenchReport, SyntheticSpec};
use bgnn_core::cascade::{depth_param_bytes, train_cascade, IdaVariant, TrainConfig};
use bgnn_core::eval::{
    run_ablation, verify_transfer_bound, AblationConfig, AblationTable, BoundInstance, EvalConfig,
    ROW_ADV, ROW_AGGREGATION, ROW_MLP, ROW_RAW,
};
use bgnn_core::graph::{BipartiteDataset, Direction};
use bgnn_core::rng::seeded;
use bgnn_core::tensor::FeatureMatrix;
use rand::Rng;

const DATA_SEED: u64 = 7;
const V_KEEP: usize = 1000;
const SEEDS: usize = 5;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn report(id: usize, name: &str, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        verdict(false, format!("harness error: {msg}"))
    });
    println!(
        "criterion {id:>2} {}  {name}: {} [{:.1}s]",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        start.elapsed().as_secs_f64()
    );
    v.pass
}

/// Citation dataset: LINQS files when available, the stand-in otherwise.
fn citation(name: &str) -> (BipartiteDataset, String) {
    if let Some(root) = std::env::var_os("BGNN_DATA_DIR") {
        let dir = Path::new(&root).join(name);
        if dir.exists() {
            let ds = linqs_dataset(&dir, DATA_SEED, V_KEEP).expect("LINQS data loads");
            return (ds, format!("{name} (LINQS)"));
        }
    }
    let ds = standin_dataset(name, DATA_SEED, V_KEEP).expect("stand-in generates");
    (ds, format!("{name} (stand-in)"))
}

struct CitationRun {
    label: String,
    ablation: AblationTable,
    /// Mean micro-F1 for K = 1..=4.
    depth_f1: Vec<f64>,
}

fn eval_config() -> EvalConfig {
    EvalConfig {
        num_seeds: SEEDS,
        ..EvalConfig::default()
    }
}

fn citation_run(name: &str) -> CitationRun {
    let (ds, label) = citation(name);
    let mut cfg = AblationConfig::for_dataset(name).expect("preset");
    cfg.eval = eval_config();
    let ablation = run_ablation(&ds, &cfg).expect("ablation runs");
    let points =
        depth_sweep(&ds, &cfg.adversarial, &[1, 2, 3, 4], &cfg.eval).expect("depth sweep runs");
    CitationRun {
        label,
        ablation,
        depth_f1: points.iter().map(|p| p.metrics.micro_mean).collect(),
    }
}

fn micro(t: &AblationTable, row: &str) -> f64 {
    t.get(row).expect("row present").micro_mean
}

fn c1_numerical_core() -> Verdict {
    let rec = numeric_checks::all_gradients();
    let shapes = numeric_checks::CASES;
    let (what, seed, worst) = rec.worst().cloned().expect("checks ran");
    let spmm = numeric_checks::sparse_product_deviation(100);
    verdict(
        worst < 1e-4 && shapes >= 20 && spmm <= 1e-12,
        format!(
            "{} gradient comparisons over {shapes} shapes, worst rel. err {worst:.2e} ({what}, case {seed}); \
             spmm max deviation {spmm:.1e} over 100 instances",
            rec.checks.len()
        ),
    )
}

fn c2_normalization() -> Verdict {
    let mut rng = seeded(2);
    let mut bad = 0;
    let mut empty = 0;
    for _ in 0..1000 {
        let m = rng.random_range(1..40);
        let n = rng.random_range(1..40);
        let e = rng.random_range(0..=(m * n).min(200));
        let mut edges: Vec<(usize, usize)> = (0..e)
            .map(|_| (rng.random_range(0..m), rng.random_range(0..n)))
            .collect();
        BipartiteDataset::dedup_edges(&mut edges);
        let ds = BipartiteDataset::new(
            edges,
            FeatureMatrix::zeros(m, 1),
            FeatureMatrix::zeros(n, 1),
            None,
            None,
        )
        .expect("valid graph");
        for dir in [Direction::UFromV, Direction::VFromU] {
            let b = ds.incidence(dir);
            for (i, s) in b.row_sums().into_iter().enumerate() {
                let nnz = b.row(i).0.len();
                if nnz == 0 {
                    empty += 1;
                }
                let ok = if nnz == 0 {
                    s == 0.0
                } else {
                    (s - 1.0).abs() <= 1e-9
                };
                bad += usize::from(!ok);
            }
        }
    }
    verdict(
        bad == 0,
        format!("1000 graphs, {bad} bad rows, {empty} zero-degree rows checked"),
    )
}

fn c3_transfer_bound() -> Verdict {
    let mut rng = seeded(3);
    let mut violations = 0;
    let mut slack = f64::INFINITY;
    for _ in 0..1000 {
        let h = rng.random_range(1..=6);
        let y = rng.random_range(1..=4);
        let c =
            verify_transfer_bound(&BoundInstance::random(h, y, &mut rng)).expect("valid instance");
        violations += usize::from(!c.holds);
        slack = slack.min(c.rhs - c.lhs);
    }
    verdict(
        violations == 0,
        format!("1000 instances, {violations} violations, smallest slack {slack:.2e}"),
    )
}

fn c4_reproduction(runs: &[CitationRun]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in runs {
        let (adv, raw) = (micro(&r.ablation, ROW_ADV), micro(&r.ablation, ROW_RAW));
        pass &= adv >= raw + 0.03;
        parts.push(format!(
            "{}: Adv {adv:.4} raw {raw:.4} margin {:+.4}",
            r.label,
            adv - raw
        ));
    }
    verdict(pass, format!("{} (need >= +0.03)", parts.join("; ")))
}

fn c5_ablation(cora: &CitationRun) -> Verdict {
    let t = &cora.ablation;
    let (adv, raw, agg, mlp) = (
        micro(t, ROW_ADV),
        micro(t, ROW_RAW),
        micro(t, ROW_AGGREGATION),
        micro(t, ROW_MLP),
    );
    let pass = adv - raw >= 0.01 && raw - agg >= 0.01 && adv - mlp >= 0.01;
    verdict(
        pass,
        format!(
            "{}: Adv {adv:.4}, raw {raw:.4}, aggregation {agg:.4}, MLP {mlp:.4}; \
             Adv-raw {:+.4}, raw-agg {:+.4}, Adv-MLP {:+.4} (each need >= +0.01)",
            cora.label,
            adv - raw,
            raw - agg,
            adv - mlp
        ),
    )
}

fn c6_depth(runs: &[CitationRun]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in runs {
        let f = &r.depth_f1;
        let ok = f[1] > f[0] && (f[2] - f[1]).abs() <= 0.02 && (f[3] - f[1]).abs() <= 0.02;
        pass &= ok;
        parts.push(format!(
            "{}: K=1 {:.4}, K=2 {:.4}, K=3 {:.4}, K=4 {:.4}",
            r.label, f[0], f[1], f[2], f[3]
        ));
    }
    verdict(
        pass,
        format!(
            "{} (need K2 > K1, |K3-K2|, |K4-K2| <= 0.02)",
            parts.join("; ")
        ),
    )
}

fn c7_scaling() -> Verdict {
    let cfg = TrainConfig::preset("large", IdaVariant::Adversarial).expect("preset");
    let mut records = Vec::new();
    for e in [10_000, 100_000, 1_000_000] {
        let ds = generate_synthetic(&SyntheticSpec::scaled(e, 0)).expect("synthetic graph");
        records.push(time_epochs(&ds, &cfg, 1, 3).expect("timing runs"));
    }
    let r = BenchReport::new(records, 1);
    let ms: Vec<String> = r
        .records
        .iter()
        .map(|x| format!("{}:{:.1}ms", x.num_edges, x.epoch_wall_ms))
        .collect();
    verdict(
        r.flops_linear() && r.r_squared >= 0.95,
        format!(
            "flops linear: {}, R^2 {:.4} (need >= 0.95); {}",
            r.flops_linear(),
            r.r_squared,
            ms.join(", ")
        ),
    )
}

fn c8_memory(cora: &BipartiteDataset) -> Verdict {
    let base = TrainConfig::preset("cora", IdaVariant::Adversarial).expect("preset");
    let k3 = TrainConfig {
        depth_k: 3,
        ..base.clone()
    };
    let out = train_cascade(cora, &k3).expect("K=3 cascade");
    let (mut wu, mut wv) = (cora.features_u().cols(), cora.features_v().cols());
    let mut footprints = Vec::new();
    for s in &out.trace.depths {
        footprints.push(depth_param_bytes(wu, wv, &k3));
        (wu, wv) = (s.output_dim_u, s.output_dim_v);
    }
    let max_single = footprints.iter().copied().max().unwrap_or(0);
    let equal = out.peak_param_bytes == max_single;

    let free = compare_training_modes(cora, &base, None).expect("modes run");
    let le = free.cascaded.peak_live_bytes <= free.end_to_end.peak_live_bytes;
    let budget = free.cascaded.peak_live_bytes;
    let tight = compare_training_modes(cora, &base, Some(budget)).expect("modes run");
    let oom = tight.cascaded.completed && !tight.end_to_end.completed;
    verdict(
        equal && le && oom,
        format!(
            "K=3 peak param bytes {} vs max single depth {max_single}; K=2 peak live cascaded {} <= end-to-end {}: {le}; \
             budget {budget}: cascaded {}, end-to-end {}",
            out.peak_param_bytes,
            free.cascaded.peak_live_bytes,
            free.end_to_end.peak_live_bytes,
            tight.cascaded.status(),
            tight.end_to_end.status()
        ),
    )
}

fn c9_alignment(cora: &BipartiteDataset) -> Verdict {
    let toy = alignment_toy(400, 0.8, 1).expect("toy");
    let toy_cfg = TrainConfig {
        depth_k: 1,
        batch_size: 64,
        epochs_per_depth: 100,
        learning_rate: 1e-3,
        weight_decay: 0.0,
        dropout_keep: 1.0,
        encoder_output_dim: 2,
        d_steps_per_g_step: 5,
        seed: 1,
        ..TrainConfig::default()
    };
    let t = train_cascade(&toy, &toy_cfg).expect("toy trains");
    let ts = &t.trace.depths[0];
    let toy_ratio = ts.final_alignment_u / ts.initial_alignment_u;

    let cfg = TrainConfig {
        depth_k: 1,
        ..TrainConfig::preset("cora", IdaVariant::Adversarial).expect("preset")
    };
    let c = train_cascade(cora, &cfg).expect("cora trains");
    let cs = &c.trace.depths[0];
    let cora_ratio = cs.final_alignment_u / cs.initial_alignment_u;
    verdict(
        toy_ratio <= 0.5 && cora_ratio <= 0.5,
        format!(
            "toy {:.4} -> {:.4} (ratio {toy_ratio:.3}); cora depth 1 {:.4} -> {:.4} (ratio {cora_ratio:.3}); need <= 0.5",
            ts.initial_alignment_u, ts.final_alignment_u, cs.initial_alignment_u, cs.final_alignment_u
        ),
    )
}

fn bgnn(args: &[&str]) {
    let o = Command::new(env!("CARGO_BIN_EXE_bgnn"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        o.status.success(),
        "bgnn {args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).expect("readable") {
        let p = e.expect("entry").path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn c10_determinism() -> Verdict {
    let tmp = tempfile::tempdir().expect("tempdir");
    let root = tmp.path();
    let s = |p: &Path| p.to_str().expect("utf-8").to_string();
    let data = root.join("data");
    bgnn(&[
        "synth",
        "--standin",
        "cora",
        "--seed",
        "7",
        "--out",
        &s(&data),
    ]);
    for run in ["a", "b"] {
        let dir = root.join(run);
        bgnn(&[
            "train",
            "--dataset",
            &s(&data),
            "--seed",
            "7",
            "--out",
            &s(&dir.join("train")),
        ]);
        let z = dir.join("train").join("z_u.txt");
        bgnn(&[
            "eval",
            "--dataset",
            &s(&data),
            "--embeddings",
            &s(&z),
            "--seed",
            "7",
            "--out",
            &s(&dir.join("eval")),
        ]);
    }
    let timing = |p: &Path| {
        matches!(
            p.file_name().and_then(|n| n.to_str()),
            Some("run.log" | "trace_timing.csv")
        )
    };
    let a: Vec<PathBuf> = files_under(&root.join("a"))
        .into_iter()
        .filter(|p| !timing(p))
        .collect();
    let mut differing = Vec::new();
    for p in &a {
        let q = root
            .join("b")
            .join(p.strip_prefix(root.join("a")).expect("under a"));
        if std::fs::read(p).ok() != std::fs::read(&q).ok() {
            differing.push(
                p.file_name()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned(),
            );
        }
    }
    let n_b = files_under(&root.join("b"))
        .into_iter()
        .filter(|p| !timing(p))
        .count();
    verdict(
        differing.is_empty() && n_b == a.len() && !a.is_empty(),
        format!(
            "{} files compared (embeddings, checkpoints, trace, metrics, config); differing: {:?}",
            a.len(),
            differing
        ),
    )
}

fn main() {
    // `cargo test -- --list` and name filters come through here too
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut passed = 0;
    let mut tally = |ok: bool| passed += usize::from(ok);
    tally(report(1, "numerical core", c1_numerical_core));
    tally(report(2, "incidence normalization", c2_normalization));
    tally(report(3, "transfer bound", c3_transfer_bound));

    let start = Instant::now();
    let runs: Vec<CitationRun> = ["cora", "citeseer"].into_iter().map(citation_run).collect();
    println!(
        "(citation ablations and depth sweeps computed in {:.1}s)",
        start.elapsed().as_secs_f64()
    );
    tally(report(4, "citation reproduction", || {
        c4_reproduction(&runs)
    }));
    tally(report(5, "ablation ordering", || c5_ablation(&runs[0])));
    tally(report(6, "depth behaviour", || c6_depth(&runs)));
    tally(report(7, "linear scaling", c7_scaling));
    let (cora, _) = citation("cora");
    tally(report(8, "single-live-depth memory", || c8_memory(&cora)));
    tally(report(9, "alignment", || c9_alignment(&cora)));
    tally(report(10, "determinism", c10_determinism));
    println!("acceptance: {passed}/10 criteria passed");
}

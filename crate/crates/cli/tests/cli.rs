use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bgnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bgnn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small fully labelled synthetic dataset.
fn dataset(root: &Path) -> PathBuf {
    let dir = root.join("data");
    let o = bgnn(&[
        "synth",
        "--synthetic-edges",
        "1500",
        "--seed",
        "2",
        "--out",
        s(&dir),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    dir
}

const FAST: &[&str] = &[
    "--preset", "large", "--depth", "2", "--epochs", "1", "--dim", "4",
];

fn train(data: &Path, out: &Path, extra: &[&str]) -> Output {
    let seeded = extra.contains(&"--seed");
    let mut a = vec!["train", "--dataset", s(data), "--out", s(out)];
    if !seeded {
        a.extend_from_slice(&["--seed", "5"]);
    }
    a.extend_from_slice(FAST);
    a.extend_from_slice(extra);
    bgnn(&a)
}

#[test]
fn help_lists_preset_defaults() {
    let o = bgnn(&["train", "--help"]);
    assert_eq!(code(&o), 0);
    let h = String::from_utf8_lossy(&o.stdout);
    for needle in [
        "[default: 400]",
        "[default: 0.0004]",
        "[default: 0.35]",
        "[default: 24]",
        "citeseer  mlp",
    ] {
        assert!(h.contains(needle), "missing {needle}");
    }
}

#[test]
fn train_then_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let data = dataset(tmp.path());
    let out = tmp.path().join("run");
    let o = train(&data, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in [
        "z_u.txt",
        "z_v.txt",
        "trace.jsonl",
        "trace_timing.csv",
        "config.json",
        "summary.json",
        "run.log",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(out.join("checkpoints").read_dir().unwrap().count() >= 2);

    let ev = tmp.path().join("eval");
    let z = out.join("z_u.txt");
    let o = bgnn(&[
        "eval",
        "--dataset",
        s(&data),
        "--embeddings",
        s(&z),
        "--seeds",
        "2",
        "--out",
        s(&ev),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(ev.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["per_seed"].as_array().unwrap().len(), 2);
    let f1 = m["micro_mean"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f1));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let data = dataset(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&train(&data, &a, &[])), 0);
    assert_eq!(code(&train(&data, &b, &[])), 0);
    for f in [
        "z_u.txt",
        "z_v.txt",
        "trace.jsonl",
        "config.json",
        "summary.json",
    ] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let c = tmp.path().join("c");
    assert_eq!(code(&train(&data, &c, &["--seed", "6"])), 0);
    assert_ne!(
        std::fs::read(a.join("z_u.txt")).unwrap(),
        std::fs::read(c.join("z_u.txt")).unwrap()
    );
}

#[test]
fn flag_beats_file_beats_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let data = dataset(tmp.path());
    let cfg = tmp.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[data]\npreset = \"large\"\n[train]\nbatch_size = 77\nencoder_output_dim = 5\n",
    )
    .unwrap();
    let out = tmp.path().join("run");
    let o = bgnn(&[
        "train",
        "--config",
        s(&cfg),
        "--dataset",
        s(&data),
        "--out",
        s(&out),
        "--dim",
        "3",
        "--epochs",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let c: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(c["preset"], "large");
    assert_eq!(c["train"]["batch_size"], 77);
    assert_eq!(c["train"]["encoder_output_dim"], 3);
    assert_eq!(c["train"]["weight_decay"], 5e-4);
    assert_eq!(c["digest"].as_str().unwrap().len(), 64);
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[train]\nbatch_sise = 3\n").unwrap();
    let o = bgnn(&[
        "train",
        "--config",
        s(&cfg),
        "--out",
        s(&tmp.path().join("o")),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("batch_sise"));

    std::fs::write(&cfg, "[evaluation]\nnum_seeds = 3\n").unwrap();
    let o = bgnn(&[
        "train",
        "--config",
        s(&cfg),
        "--out",
        s(&tmp.path().join("o")),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("evaluation"));
}

#[test]
fn bad_inputs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let data = dataset(tmp.path());
    let out = tmp.path().join("o");

    let missing = tmp.path().join("no_such_dir");
    let o = bgnn(&["train", "--dataset", s(&missing), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no_such_dir"));

    // V-side embeddings scored against U labels
    assert_eq!(code(&train(&data, &out, &[])), 0);
    let zv = out.join("z_v.txt");
    let o = bgnn(&[
        "eval",
        "--dataset",
        s(&data),
        "--embeddings",
        s(&zv),
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("embedding rows"));

    let o = bgnn(&[
        "train",
        "--dataset",
        s(&data),
        "--lr",
        "-1",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 2);
    let o = bgnn(&["train", "--no-such-flag"]);
    assert_eq!(code(&o), 2);
    let o = bgnn(&["synth", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn divergence_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let data = dataset(tmp.path());
    let o = train(&data, &tmp.path().join("o"), &["--lr", "1e300"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("non-finite"));
}

#[test]
fn bench_modes_reports_oom_at_budget() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m");
    let o = bgnn(&[
        "bench",
        "modes",
        "--edges",
        "2000",
        "--depth",
        "3",
        "--epochs",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cmp: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("bench_modes.json")).unwrap())
            .unwrap();
    let budget = cmp["cascaded"]["peak_live_bytes"]
        .as_u64()
        .unwrap()
        .to_string();
    let o = bgnn(&[
        "bench",
        "modes",
        "--edges",
        "2000",
        "--depth",
        "3",
        "--epochs",
        "1",
        "--mem-budget-bytes",
        &budget,
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("bench_modes.txt")).unwrap();
    let line = |mode: &str| {
        text.lines()
            .find(|l| l.starts_with(mode))
            .unwrap()
            .to_string()
    };
    assert!(line("cascaded").ends_with("completed"), "{text}");
    assert!(line("end-to-end").ends_with("OOM-at-budget"), "{text}");
}

#[test]
fn bench_scaling_writes_series() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let o = bgnn(&[
        "bench",
        "scaling",
        "--edges",
        "500,1e3",
        "--timed",
        "1",
        "--warmup",
        "0",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("bench_scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("edges,wall_ms\n500,"));
    assert_eq!(
        std::fs::read_to_string(out.join("bench_scaling.jsonl"))
            .unwrap()
            .lines()
            .count(),
        2
    );
}

use std::path::Path;
use std::process::{Command, Output};

use motret::eval::MetricsReport;
use motret::index::EmbeddingStore;
use motret::sweep::SweepResult;

const CONFIG: &str = r#"{
  "motion": { "variant": "mot", "model_dim": 16, "depth": 2, "heads": 4, "mot_ffn": 32, "output_dim": 64, "max_len": 64 },
  "text": { "variant": "affine", "hidden": 64, "featurizer_dim": 64 },
  "d_common": 64,
  "adam": { "lr": 0.003 },
  "batch_size": 32,
  "steps": 80
}"#;

fn motret(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motret"))
        .args(args)
        .current_dir(dir)
        .env_remove("MOTRET_CONFIG")
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn unknown_flag_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = motret(&["synth", "--out", "ds", "--no-such-flag"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn missing_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = motret(&["evaluate", "--checkpoint", ".", "--data", "nope.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_subcommand_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(motret(&[], dir.path()).status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{").unwrap();
    let out = motret(&["train", "--data", "bad.json", "--out", "ck"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn synth_train_evaluate_search() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cfg.json"), CONFIG).unwrap();
    ok(motret(&["synth", "--pairs", "32", "--seed", "7", "--out", "ds"], d));
    let out = Command::new(env!("CARGO_BIN_EXE_motret"))
        .args(["train", "--data", "ds/manifest.json", "--out", "ck"])
        .env("MOTRET_CONFIG", d.join("cfg.json"))
        .current_dir(d)
        .output()
        .unwrap();
    let stdout = ok(out);
    assert!(stdout.contains("trained 80 steps on 32 pairs"), "{stdout}");

    ok(motret(
        &["evaluate", "--checkpoint", "ck", "--data", "ds/manifest.json", "--split", "train", "--json", "r.json"],
        d,
    ));
    let report: MetricsReport = serde_json::from_slice(&std::fs::read(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(report.queries, 32);
    assert!(report.recall_at(1).unwrap() >= 90.0, "{report:?}");

    ok(motret(
        &["encode-motions", "--checkpoint", "ck", "--data", "ds/manifest.json", "--out", "ck/idx.midx"],
        d,
    ));
    let stdout = ok(motret(
        &["search", "--index", "ck/idx.midx", "--text", "a person walks forward", "--k", "5"],
        d,
    ));
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 5);
    let mut last = f64::INFINITY;
    for (i, l) in lines.iter().enumerate() {
        let f: Vec<&str> = l.split(' ').collect();
        assert_eq!(f.len(), 3, "{l}");
        assert_eq!(f[0], (i + 1).to_string());
        assert!(f[1].starts_with("synth-"));
        let s: f64 = f[2].parse().unwrap();
        assert!(s <= last);
        last = s;
    }

    let stdout = ok(motret(
        &["encode-texts", "--checkpoint", "ck", "--text", "walk", "--text", "jump in place"],
        d,
    ));
    let rows: Vec<serde_json::Value> = stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["text"], "jump in place");
    let e: Vec<f64> = serde_json::from_value(rows[0]["embedding"].clone()).unwrap();
    assert_eq!(e.len(), 64);
    assert!((e.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-9);

    ok(motret(
        &["encode-texts", "--checkpoint", "ck", "--data", "ds/manifest.json", "--out", "texts.jsonl"],
        d,
    ));
    assert_eq!(std::fs::read_to_string(d.join("texts.jsonl")).unwrap().lines().count(), 32);
}

#[test]
fn index_merges_disjoint_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = EmbeddingStore::build(2, [("m1", vec![1.0, 0.0]), ("m2", vec![0.0, 1.0])]).unwrap();
    let b = EmbeddingStore::build(2, [("m3", vec![0.6, 0.8])]).unwrap();
    a.save(&d.join("a.midx")).unwrap();
    b.save(&d.join("b.midx")).unwrap();
    ok(motret(&["index", "--embeddings", "a.midx", "b.midx", "--out", "all.midx"], d));
    let all = EmbeddingStore::load(&d.join("all.midx")).unwrap();
    assert_eq!(all.ids(), ["m1", "m2", "m3"]);
    assert_eq!(all.vector(2), b.vector(0));

    let out = motret(&["index", "--embeddings", "a.midx", "a.midx", "--out", "dup.midx"], d);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cfg.json"), CONFIG).unwrap();
    ok(motret(&["synth", "--pairs", "16", "--seed", "1", "--test", "0.25", "--out", "ds"], d));
    ok(motret(
        &[
            "sweep", "--data", "ds/manifest.json", "--config", "cfg.json", "--d-common", "8,16", "--steps", "3",
            "--csv", "s.csv", "--json", "s.json",
        ],
        d,
    ));
    let csv = std::fs::read_to_string(d.join("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("encoder,loss,d_common,"));
    let r: SweepResult = serde_json::from_slice(&std::fs::read(d.join("s.json")).unwrap()).unwrap();
    assert_eq!(r.cells.len(), 2);
    for c in &r.cells {
        assert_eq!(c.report.queries, 4);
        c.report.validate().unwrap();
    }
}

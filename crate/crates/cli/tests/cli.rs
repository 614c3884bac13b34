use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aspect_embed::corpus::{encode_split, load_corpus, training_vocabulary, LoadOptions, Split};
use aspect_embed::encoder::Checkpoint;
use aspect_embed::eval::{embed_documents, EmbeddingRecord};
use aspect_embed::io::to_jsonl;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_aspect-embed"));
    c.env_remove("ASPECT_EMBED_OUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_category(out: &Output) -> String {
    let err = String::from_utf8_lossy(&out.stderr);
    let line = err.lines().next().unwrap_or_default().to_owned();
    assert_eq!(err.lines().count(), 1, "error output should be one line: {err}");
    line.strip_prefix("error[").and_then(|s| s.split(']').next()).unwrap_or_default().to_owned()
}

#[test]
fn gen_synthetic_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for f in [&a, &b] {
        ok(&["gen-synthetic", "--aspects", "2", "--docs", "1000", "--seed", "7", "-o", p(f)]);
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(!ta.is_empty());
    assert_eq!(ta, tb);
    let rec = read_json(&dir.path().join("a.jsonl.run.json"));
    assert_eq!(rec["command"], "gen-synthetic");
    assert_eq!(rec["seed"], 7);
    assert_eq!(rec["config"]["docs"], 1000);
}

#[test]
fn different_seeds_give_different_corpora() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    ok(&["gen-synthetic", "--docs", "50", "--seed", "1", "-o", p(&a)]);
    ok(&["gen-synthetic", "--docs", "50", "--seed", "2", "-o", p(&b)]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn output_directory_comes_from_environment() {
    let dir = TempDir::new().unwrap();
    let out = bin()
        .env("ASPECT_EMBED_OUT_DIR", dir.path())
        .args(["gen-synthetic", "--docs", "20"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("synthetic.jsonl").is_file());
    assert!(dir.path().join("synthetic.jsonl.run.json").is_file());
}

#[test]
fn usage_errors_exit_with_two() {
    let out = run(&["gen-synthetic", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_category(&out), "usage");

    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["eval-auc", "-e", "/definitely/not/here.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_category(&out), "usage");
}

#[test]
fn config_violation_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("c.jsonl");
    ok(&["gen-synthetic", "--docs", "60", "-o", p(&corpus)]);
    let out = run(&["train", "-c", p(&corpus), "--window", "4", "--out-dir", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_category(&out), "config");
}

#[test]
fn malformed_input_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{not json\n").unwrap();
    let out = run(&["eval-auc", "-e", p(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!stderr_category(&out).is_empty());
}

#[test]
fn help_exits_with_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in [
        "build-vocab",
        "gen-synthetic",
        "train",
        "embed",
        "eval-auc",
        "cross-auc",
        "decorrelated-auc",
        "top-words",
        "highlight",
    ] {
        assert!(text.contains(cmd), "help lists {cmd}");
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Per-query AUC by exhaustive pair counting, averaged within groups, then across groups.
fn brute_group_auc(vectors: &[Vec<f64>], groups: &[&str]) -> f64 {
    let mut by_group: std::collections::BTreeMap<&str, Vec<f64>> = Default::default();
    for q in 0..vectors.len() {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..vectors.len() {
            if i == q || groups[i] != groups[q] {
                continue;
            }
            for j in 0..vectors.len() {
                if j == q || groups[j] == groups[q] {
                    continue;
                }
                let (sp, sn) = (cosine(&vectors[q], &vectors[i]), cosine(&vectors[q], &vectors[j]));
                wins += if sp > sn {
                    1.0
                } else if sp == sn {
                    0.5
                } else {
                    0.0
                };
                pairs += 1.0;
            }
        }
        if pairs > 0.0 {
            by_group.entry(groups[q]).or_default().push(wins / pairs);
        }
    }
    let means: Vec<f64> = by_group.values().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
    means.iter().sum::<f64>() / means.len() as f64
}

#[test]
fn eval_auc_matches_exhaustive_oracle() {
    let dir = TempDir::new().unwrap();
    let groups = ["a", "a", "a", "b", "b", "c", "c", "c", "c"];
    let vectors: Vec<Vec<f64>> = (0..groups.len())
        .map(|i| {
            let x = i as f64;
            vec![(x * 1.3).sin(), (x * 0.7).cos(), 0.2 * x - 0.5]
        })
        .collect();
    let mut lines = String::new();
    for (i, (v, g)) in vectors.iter().zip(groups).enumerate() {
        let rec = serde_json::json!({ "id": format!("d{i}"), "aspect": "population", "vector": v, "group": g });
        lines.push_str(&rec.to_string());
        lines.push('\n');
    }
    let emb = dir.path().join("emb.jsonl");
    std::fs::write(&emb, lines).unwrap();
    let report = dir.path().join("auc.json");
    ok(&["eval-auc", "-e", p(&emb), "-o", p(&report)]);
    let got = read_json(&report);
    assert_eq!(got["mode"], "group_mean");
    let want = brute_group_auc(&vectors, &groups);
    assert!((got["grand_mean"].as_f64().unwrap() - want).abs() < 1e-12);
    let rec = read_json(&dir.path().join("auc.json.run.json"));
    assert_eq!(rec["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

struct Pipeline {
    dir: TempDir,
    corpus: PathBuf,
}

impl Pipeline {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn model_flags(&self) -> Vec<String> {
        [
            "--checkpoint".into(),
            self.path("best.json").display().to_string(),
            "--vocab".into(),
            self.path("vocab.json").display().to_string(),
            "-c".into(),
            self.corpus.display().to_string(),
        ]
        .to_vec()
    }
}

fn trained_pipeline() -> Pipeline {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("c.jsonl");
    ok(&["gen-synthetic", "--aspects", "2", "--docs", "120", "--seed", "3", "--filler-size", "40", "-o", p(&corpus)]);
    ok(&[
        "train", "-c", p(&corpus), "--layers", "2", "--filters", "8", "--window", "3", "--embed-dim", "8",
        "--epochs", "2", "--batch-size", "8", "--triplets-per-epoch", "32", "--probe-triplets", "16",
        "--min-df", "2", "--seed", "5", "--out-dir", p(dir.path()),
    ]);
    Pipeline { dir, corpus }
}

#[test]
fn train_writes_artifacts_and_run_record() {
    let pl = trained_pipeline();
    for f in ["vocab.json", "checkpoint.json", "best.json", "metrics.jsonl", "run.json"] {
        assert!(pl.path(f).is_file(), "{f} missing");
    }
    let metrics = std::fs::read_to_string(pl.path("metrics.jsonl")).unwrap();
    assert_eq!(metrics.lines().count(), 3);
    let rec = read_json(&pl.path("run.json"));
    assert_eq!(rec["command"], "train");
    assert_eq!(rec["seed"], 5);
    assert_eq!(rec["encoder"]["layers"], 2);
    assert_eq!(rec["train"]["epochs"], 2);
    let hash = aspect_embed::io::sha256_file(&pl.corpus).unwrap();
    assert_eq!(rec["inputs"][0]["sha256"], hash.as_str());

    let again = TempDir::new().unwrap();
    ok(&[
        "train", "-c", p(&pl.corpus), "--layers", "2", "--filters", "8", "--window", "3", "--embed-dim", "8",
        "--epochs", "2", "--batch-size", "8", "--triplets-per-epoch", "32", "--probe-triplets", "16",
        "--min-df", "2", "--seed", "5", "--out-dir", p(again.path()),
    ]);
    for f in ["checkpoint.json", "best.json", "metrics.jsonl", "vocab.json"] {
        assert_eq!(std::fs::read(pl.path(f)).unwrap(), std::fs::read(again.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn embed_matches_library_bytes() {
    let pl = trained_pipeline();
    let out = pl.path("emb.jsonl");
    let mut args: Vec<String> = vec!["embed".into()];
    args.extend(pl.model_flags());
    args.extend(["--split".into(), "test".into(), "-o".into(), out.display().to_string()]);
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());

    let corpus = load_corpus(&pl.corpus, None, &LoadOptions::default()).unwrap();
    let vocab = training_vocabulary(&corpus, 2).unwrap();
    let ck = Checkpoint::<f64>::from_json(&std::fs::read_to_string(pl.path("best.json")).unwrap()).unwrap();
    let model = ck.model().unwrap();
    let docs = encode_split(&corpus, Split::Test, &vocab, model.config.seq_len);
    let records: Vec<EmbeddingRecord> = embed_documents(&model, &docs, &corpus.manifest.aspect_names).unwrap();
    assert_eq!(std::fs::read_to_string(&out).unwrap(), to_jsonl(&records).unwrap());
}

#[test]
fn evaluation_commands_run_end_to_end() {
    let pl = trained_pipeline();
    let emb = pl.path("emb.jsonl");
    let mut args: Vec<String> = vec!["embed".into()];
    args.extend(pl.model_flags());
    args.extend(["--split".into(), "all".into(), "-o".into(), emb.display().to_string()]);
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());

    let cross = pl.path("cross.json");
    let csv = pl.path("cross.csv");
    ok(&["cross-auc", "-e", p(&emb), "-o", p(&cross), "--csv", p(&csv)]);
    let m = read_json(&cross);
    assert_eq!(m["matrix"].as_array().unwrap().len(), 2);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 3);

    let dec = pl.path("dec.json");
    ok(&["decorrelated-auc", "-e", p(&emb), "-o", p(&dec)]);
    assert_eq!(read_json(&dec)["mode"], "decorrelated_cross_auc");

    let auc = pl.path("auc.json");
    let aspect = m["rows"][0].as_str().unwrap().to_owned();
    ok(&["eval-auc", "-e", p(&emb), "--aspect", &aspect, "-o", p(&auc)]);
    assert_eq!(read_json(&auc)["mode"], "query_mean");

    let words = pl.path("words.json");
    let mut args: Vec<String> = vec!["top-words".into()];
    args.extend(pl.model_flags());
    args.extend(["--top".into(), "3".into(), "--min-occurrence".into(), "1".into(), "-o".into(), words.display().to_string()]);
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let w = read_json(&words);
    assert_eq!(w.as_array().unwrap().len(), 2);
    assert_eq!(w[0]["words"].as_array().unwrap().len(), 3);

    for (format, name) in [("json", "hl.jsonl"), ("html", "hl.html")] {
        let out = pl.path(name);
        let mut args: Vec<String> = vec!["highlight".into()];
        args.extend(pl.model_flags());
        args.extend(["--format".into(), format.into(), "--limit".into(), "3".into(), "-o".into(), out.display().to_string()]);
        ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
        let text = std::fs::read_to_string(&out).unwrap();
        if format == "json" {
            assert_eq!(text.lines().count(), 6);
            aspect_embed::interpret::validate_highlight_json(&text).unwrap();
        } else {
            assert!(text.starts_with("<!DOCTYPE html>"));
        }
    }
}

#[test]
fn resume_with_zero_epochs_keeps_checkpoint() {
    let pl = trained_pipeline();
    let out = TempDir::new().unwrap();
    ok(&[
        "train", "-c", p(&pl.corpus), "--vocab", p(&pl.path("vocab.json")), "--resume", p(&pl.path("checkpoint.json")),
        "--layers", "2", "--filters", "8", "--window", "3", "--embed-dim", "8", "--epochs", "0",
        "--out-dir", p(out.path()),
    ]);
    assert_eq!(
        std::fs::read(pl.path("checkpoint.json")).unwrap(),
        std::fs::read(out.path().join("checkpoint.json")).unwrap()
    );
}

#[test]
fn published_settings_parse_as_flags() {
    use aspect_embed_cli::{Cli, Command as Sub};
    use clap::Parser;
    let cli = Cli::try_parse_from([
        "aspect-embed", "train", "-c", "c.jsonl", "--layers", "3", "--filters", "200", "--window", "5",
        "--embed-dim", "200", "--l2", "1e-5", "--l1", "1e-6",
    ])
    .unwrap();
    let Sub::Train(t) = cli.command else { panic!("expected train") };
    assert_eq!((t.layers, t.filters, t.window, t.embed_dim), (3, 200, 5, 200));
    assert_eq!((t.l2, t.l1), (1e-5, 1e-6));
    assert!(!t.parallel);
}

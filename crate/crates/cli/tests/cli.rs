use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::sync::OnceLock;

use nefmath::corpus::{load_corpus, Split};
use nefmath::features::extract_features;
use nefmath::store::{load_model, save_corrections, CorrectionSample, CorrectionsFile};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nefmath"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("SOURCE_DATE_EPOCH").output().expect("binary runs")
}

fn ok(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    if out.stdout.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&out.stdout).expect("stdout is JSON")
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small corpus and model shared by the tests.
struct Fixture {
    _dir: tempfile::TempDir,
    corpus: PathBuf,
    model: PathBuf,
    train: Value,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("corpus.json");
        let model = dir.path().join("model.json");
        ok(&["gen-corpus", "--seed", "5", "--train", "30", "--test", "10", "--out", s(&corpus)]);
        let train = ok(&[
            "train", "--init", "--corpus", s(&corpus), "--out", s(&model), "--population", "10", "--generations", "4", "--seed", "3",
        ]);
        Fixture { _dir: dir, corpus, model, train }
    })
}

#[test]
fn gen_corpus_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("c.json"));
    ok(&["gen-corpus", "--seed", "9", "--train", "8", "--test", "4", "--out", s(&a)]);
    ok(&["gen-corpus", "--seed", "9", "--train", "8", "--test", "4", "--out", s(&b)]);
    ok(&["gen-corpus", "--seed", "10", "--train", "8", "--test", "4", "--out", s(&c)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    let corpus = load_corpus(&a).unwrap();
    assert_eq!((corpus.train.len(), corpus.test.len()), (8, 4));
}

#[test]
fn train_init_is_byte_identical_for_a_seed() {
    let f = fixture();
    let again = f.model.with_file_name("again.json");
    ok(&[
        "train", "--init", "--corpus", s(&f.corpus), "--out", s(&again), "--population", "10", "--generations", "4", "--seed", "3",
    ]);
    assert_eq!(fs::read(&f.model).unwrap(), fs::read(&again).unwrap());
    let history = f.train["history"].as_array().unwrap();
    assert_eq!(history.len(), 5);
    assert!(history.windows(2).all(|w| w[1].as_f64() >= w[0].as_f64()));
}

#[test]
fn training_fitness_equals_train_split_accuracy() {
    let f = fixture();
    let report = ok(&["eval", "--corpus", s(&f.corpus), "--model", s(&f.model), "--split", "train"]);
    let fitness = f.train["fitness"].as_f64().unwrap();
    assert!((report["stroke_accuracy"].as_f64().unwrap() - 100.0 * fitness).abs() <= 1e-9);
}

#[test]
fn eval_reports_consistent_percentages() {
    let f = fixture();
    let r = ok(&["eval", "--corpus", s(&f.corpus), "--model", s(&f.model)]);
    let n = r["strokes"].as_u64().unwrap() as f64;
    let diag: u64 = r["confusion"].as_object().unwrap().iter().map(|(t, row)| row.get(t).and_then(Value::as_u64).unwrap_or(0)).sum();
    assert!((r["stroke_accuracy"].as_f64().unwrap() - 100.0 * diag as f64 / n).abs() <= 1e-9);
    let oracle = ok(&["eval", "--corpus", s(&f.corpus), "--oracle-labels"]);
    for k in ["stroke_accuracy", "reconstruction_accuracy", "structural_accuracy"] {
        assert_eq!(oracle[k].as_f64(), Some(100.0), "{k}");
    }
}

#[test]
fn finetune_on_an_empty_reservoir_is_a_no_op() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    fs::copy(&f.model, &model).unwrap();
    let before = fs::read(&model).unwrap();
    let out = run(&["train", "--finetune", "--model", s(&model)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["applied"], false);
    assert_eq!(fs::read(&model).unwrap(), before);
}

#[test]
fn finetune_learns_stored_corrections() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    fs::copy(&f.model, &model).unwrap();
    let file = load_model(&model).unwrap();
    let corpus = load_corpus(&f.corpus).unwrap();
    let e = &corpus.split(Split::Test)[0];
    let x = extract_features(&e.ink.strokes[0], &file.model.features);
    let label = if e.stroke_labels[0] == "7" { "3" } else { "7" };
    let mut reservoir = CorrectionsFile::default();
    reservoir.push(CorrectionSample { features: x.0.clone(), label: label.into() });
    save_corrections(&dir.path().join("corrections.json"), &reservoir).unwrap();
    let v = ok(&["train", "--finetune", "--model", s(&model)]);
    assert_eq!(v["applied"], true);
    assert!(v["loss_after"].as_f64() <= v["loss_before"].as_f64());
    let tuned = load_model(&model).unwrap();
    assert_eq!(tuned.provenance.trainer, "cg");
    let c = nefmath::nefclass::classify(&tuned.model, &x).unwrap();
    assert_eq!(tuned.model.class_labels[c.best], label);
}

#[test]
fn recognize_empty_and_malformed_ink() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    fs::write(&empty, r#"{"version":1,"strokes":[]}"#).unwrap();
    let v = ok(&["recognize", s(&empty), "--model", s(&f.model)]);
    assert_eq!(v["output"], "");
    assert_eq!(v["tree"], serde_json::to_value(nefmath::structure::ExprNode::empty()).unwrap());
    assert!(v["symbols"].as_array().unwrap().is_empty());

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"version":1,"strokes":[{"id":"s","points":[[0,0,0]"#).unwrap();
    let out = run(&["recognize", s(&bad), "--model", s(&f.model)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn recognize_a_corpus_expression() {
    let f = fixture();
    let corpus = load_corpus(&f.corpus).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let ink = dir.path().join("ink.json");
    fs::write(&ink, serde_json::to_vec(&corpus.test[0].ink).unwrap()).unwrap();
    let latex = ok(&["recognize", s(&ink), "--model", s(&f.model)]);
    let mathml = ok(&["recognize", s(&ink), "--model", s(&f.model), "--format", "mathml"]);
    assert_eq!(latex["latex"], mathml["latex"]);
    assert!(mathml["output"].as_str().unwrap().starts_with("<math"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["train"]).status.code(), Some(1));
    assert_eq!(run(&["train", "--init", "--finetune"]).status.code(), Some(1));
    assert_eq!(run(&["eval", "--corpus", "/nonexistent/c.json", "--oracle-labels"]).status.code(), Some(2));
    assert_eq!(run(&["recognize", "/nonexistent/ink.json", "--model", "/nonexistent/m.json"]).status.code(), Some(2));
}

#[test]
fn zero_jitter_training_fits_the_training_set() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.json");
    let model = dir.path().join("model.json");
    ok(&["gen-corpus", "--seed", "2", "--train", "40", "--test", "0", "--no-jitter", "--out", s(&corpus)]);
    let t = ok(&["train", "--init", "--corpus", s(&corpus), "--out", s(&model), "--population", "16", "--generations", "15"]);
    assert_eq!(t["fitness"].as_f64(), Some(1.0), "{}", t["history"]);
}

#[test]
fn serve_answers_ndjson() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    fs::copy(&f.model, &model).unwrap();
    let mut child = bin()
        .args(["serve", "--model", s(&model), "--port", "0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut banner = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut banner).unwrap();
    let addr = banner.split_whitespace().find_map(|w| w.strip_prefix("ndjson=")).unwrap().to_owned();
    let mut conn = TcpStream::connect(&addr).unwrap();
    writeln!(conn, r#"{{"v":1,"id":1,"op":"create_session"}}"#).unwrap();
    writeln!(conn, "not json").unwrap();
    writeln!(conn, r#"{{"v":1,"id":2,"op":"snapshot","session":"session-1"}}"#).unwrap();
    let mut lines = BufReader::new(conn.try_clone().unwrap()).lines();
    let replies: Vec<Value> = (0..3).map(|_| serde_json::from_str(&lines.next().unwrap().unwrap()).unwrap()).collect();
    child.kill().unwrap();
    let _ = child.wait();
    assert_eq!(replies[0]["session"], "session-1");
    assert_eq!(replies[1]["error"]["code"], "parse_error");
    assert_eq!((replies[2]["id"].clone(), replies[2]["revision"].clone()), (Value::from(2), Value::from(0)));
    assert!(dir.path().join("knowledge.json").exists());
}

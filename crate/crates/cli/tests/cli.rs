use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use decl::io::{read_dataset, read_json};
use decl::lab::Metrics;
use serde_json::Value;

fn decl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_decl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = decl(args);
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

fn small_gen(dir: &Path, seed: &str) {
    ok(&[
        "gen", "--n", "6", "--d", "4", "--constraints", "2", "--min-feasible", "10", "--train-sizes", "30",
        "--test-size", "20", "--validation-size", "10", "--seed", seed, "--out", p(dir),
    ]);
}

const DATASET_FILES: [&str; 6] = [
    "train.jsonl",
    "validation.jsonl",
    "test.jsonl",
    "space.json",
    "model.json",
    "meta.json",
];

#[test]
fn gen_writes_dataset_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["gen", "--n", "10", "--d", "20", "--constraints", "3", "--seed", "7", "--out", p(dir.path())]);
    for f in DATASET_FILES.iter().chain(&["manifest.json"]) {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let ds = read_dataset(dir.path()).unwrap();
    assert!(ds.space.count_feasible().unwrap() >= 50);
    assert_eq!(ds.train.len(), 320);
    assert_eq!(ds.test.len(), 200);
    let manifest: Value = read_json(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest["command"], "gen");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["config"]["n"], 10);
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 6);
}

#[test]
fn gen_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    small_gen(a.path(), "3");
    small_gen(b.path(), "3");
    for f in DATASET_FILES {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn manifest_replays_gen() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    small_gen(a.path(), "21");
    let manifest = a.path().join("manifest.json");
    ok(&["gen", "--config", p(&manifest), "--out", p(b.path())]);
    for f in DATASET_FILES {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("gen.json");
    fs::write(&config, r#"{"n": 6, "d": 2, "min_feasible": 5, "train_sizes": [4], "test_size": 3, "validation_size": 2}"#)
        .unwrap();
    let out = dir.path().join("data");
    ok(&["gen", "--config", p(&config), "--d", "3", "--out", p(&out)]);
    let ds = read_dataset(&out).unwrap();
    assert_eq!(ds.model.n(), 6);
    assert_eq!(ds.model.d(), 3);
    assert_eq!(ds.train.len(), 4);
}

#[test]
fn invalid_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = decl(&["gen", "--n", "0", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`n`"));
}

#[test]
fn missing_dataset_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = decl(&["train", "--data", p(&dir.path().join("nowhere")), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn oversized_space_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = decl(&["gen", "--n", "24", "--d", "2", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gl_equals_decl_with_k_equal_n() {
    let data = tempfile::tempdir().unwrap();
    small_gen(data.path(), "5");
    let gl = tempfile::tempdir().unwrap();
    let dk = tempfile::tempdir().unwrap();
    let common = ["--data", p(data.path()), "--epochs", "5", "--seed", "9"];
    ok(&[&["train", "--algo", "gl", "--out", p(gl.path())][..], &common].concat());
    ok(&[&["train", "--algo", "decl-k", "--k", "6", "--out", p(dk.path())][..], &common].concat());
    assert_eq!(
        fs::read(gl.path().join("weights.json")).unwrap(),
        fs::read(dk.path().join("weights.json")).unwrap()
    );
    let report: Value = read_json(&gl.path().join("report.json")).unwrap();
    assert_eq!(report["objective"].as_array().unwrap().len(), 5);
    let trace = fs::read_to_string(gl.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("epoch,decl_objective,global_objective,seconds"));
}

#[test]
fn spair_needs_a_pairwise_model() {
    let data = tempfile::tempdir().unwrap();
    small_gen(data.path(), "5");
    let out = decl(&["train", "--algo", "decl-spair", "--data", p(data.path()), "--out", p(data.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pairwise"));
}

#[test]
fn spair_trains_on_chain_data() {
    let data = tempfile::tempdir().unwrap();
    ok(&[
        "gen", "--family", "chain", "--n", "6", "--d", "3", "--constraints", "1", "--min-feasible", "5",
        "--train-sizes", "20", "--test-size", "5", "--validation-size", "5", "--out", p(data.path()),
    ]);
    let out = tempfile::tempdir().unwrap();
    ok(&["train", "--algo", "decl-spair", "--epochs", "3", "--data", p(data.path()), "--out", p(out.path())]);
    assert!(out.path().join("weights.json").exists());
}

#[test]
fn decl2_objective_decreases_over_training() {
    let data = tempfile::tempdir().unwrap();
    ok(&["gen", "--seed", "1", "--out", p(data.path())]);
    let out = tempfile::tempdir().unwrap();
    ok(&["train", "--algo", "decl-k", "--k", "2", "--epochs", "200", "--data", p(data.path()), "--out", p(out.path())]);
    let report: Value = read_json(&out.path().join("report.json")).unwrap();
    let trace: Vec<f64> = report["objective"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(trace.len(), 200);
    assert!(trace[199] <= trace[0], "{} > {}", trace[199], trace[0]);
}

#[test]
fn local_weights_decode_feasibly_with_constraints_on() {
    let data = tempfile::tempdir().unwrap();
    small_gen(data.path(), "8");
    let model = tempfile::tempdir().unwrap();
    ok(&["train", "--algo", "ll", "--epochs", "5", "--data", p(data.path()), "--out", p(model.path())]);
    let weights = model.path().join("weights.json");
    let on = tempfile::tempdir().unwrap();
    ok(&["eval", "--constraints", "on", "--data", p(data.path()), "--weights", p(&weights), "--out", p(on.path())]);
    let m: Metrics = read_json(&on.path().join("metrics.json")).unwrap();
    assert_eq!(m.infeasible_rate, 0.0);
    assert_eq!(m.instances, 20);
    let off = tempfile::tempdir().unwrap();
    ok(&["eval", "--constraints", "off", "--data", p(data.path()), "--weights", p(&weights), "--out", p(off.path())]);
    assert!(off.path().join("metrics.json").exists());
}

#[test]
fn certificate_on_one_clause_space() {
    let data = tempfile::tempdir().unwrap();
    ok(&[
        "gen", "--n", "8", "--d", "3", "--constraints", "0", "--clauses", "1", "--train-sizes", "10",
        "--test-size", "5", "--validation-size", "5", "--seed", "2", "--out", p(data.path()),
    ]);
    let out = tempfile::tempdir().unwrap();
    let run = ok(&["probe", "--mode", "certificate", "--decomp", "decl-2", "--data", p(data.path()), "--out", p(out.path())]);
    let verdict: Value = read_json(&out.path().join("verdict.json")).unwrap();
    assert_eq!(verdict["outcome"], "exact-certified", "{}", String::from_utf8_lossy(&run.stdout));

    let sampled = tempfile::tempdir().unwrap();
    ok(&[
        "probe", "--mode", "sampling", "--decomp", "decl-2", "--probes", "5", "--data", p(data.path()), "--out",
        p(sampled.path()),
    ]);
    let verdict: Value = read_json(&sampled.path().join("verdict.json")).unwrap();
    assert_eq!(verdict["outcome"], "no-counterexample");
    assert_eq!(verdict["probes"], 5);
}

#[test]
fn bench_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.json");
    fs::write(
        &config,
        r#"{"synthetic": {"n": 6, "d": 3, "constraints": 2, "min_feasible": 10, "train_sizes": [5, 10],
            "test_size": 10, "validation_size": 5, "trials": 3}, "epochs": 2}"#,
    )
    .unwrap();
    ok(&["bench", "--config", p(&config), "--threads", "2", "--out", p(dir.path())]);
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# threads=2");
    assert_eq!(lines[1], "trial,train_size,algorithm,avg_hamming,avg_f1,train_seconds");
    assert_eq!(lines.len(), 2 + 5 * 2 * 3);
    let manifest: Value = read_json(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest["config"]["threads"], 2);
}

#[test]
fn unknown_algorithm_is_a_config_error() {
    let data = tempfile::tempdir().unwrap();
    small_gen(data.path(), "5");
    let out = decl(&["train", "--algo", "svm", "--data", p(data.path()), "--out", p(data.path())]);
    assert_eq!(out.status.code(), Some(2));
    let out = decl(&["train", "--algo", "decl-k", "--k", "7", "--data", p(data.path()), "--out", p(data.path())]);
    assert_eq!(out.status.code(), Some(2));
}

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn lsearch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsearch"))
        .args(args)
        .env_remove("LSEARCH_CONFIG")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn schema_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn load(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(schema_dir().join(name)).unwrap()).unwrap()
}

fn schema_errors(schema: &str, instance: &Value) -> Vec<String> {
    let compiled = jsonschema::JSONSchema::options()
        .with_document("urn:lsearch:schema:local_factor".to_string(), load("local_factor.schema.json"))
        .compile(&load(schema))
        .expect("schema compiles");
    let msgs: Vec<String> = match compiled.validate(instance) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{e} at {}", e.instance_path)).collect(),
    };
    msgs
}

fn assert_valid(schema: &str, instance: &Value) {
    let msgs = schema_errors(schema, instance);
    assert!(msgs.is_empty(), "{schema}: {msgs:?}");
}

#[test]
fn factors_counts_and_schema() {
    let out = lsearch(&["factors", "--prime", "2", "--level", "211"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["count"], 35);
    assert_eq!(v["factors"].as_array().unwrap().len(), 35);
    assert_valid("factors.schema.json", &v);
    let mut broken = v.clone();
    broken["factors"][0]["A_p"] = Value::from("-4");
    assert!(!schema_errors("factors.schema.json", &broken).is_empty());

    let out = lsearch(&["factors", "--prime", "2", "--level", "464"]);
    let v = json_of(&out);
    assert_eq!((v["kind"].as_str(), v["count"].as_u64()), (Some("bad"), Some(26)));
    assert_valid("factors.schema.json", &v);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(lsearch(&["factors", "--prime", "4", "--level", "211"]).status.code(), Some(1));
    assert_eq!(lsearch(&["search", "--level", "0", "--sign", "1"]).status.code(), Some(1));
    assert_eq!(lsearch(&["search", "--level", "11", "--sign", "2"]).status.code(), Some(1));
    assert_eq!(lsearch(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(lsearch(&["oracle", "--curve1", "11a1", "--curve2", "99z9"]).status.code(), Some(1));
}

#[test]
fn oracle_square_of_11a1() {
    let out = lsearch(&["oracle", "--curve1", "11a1", "--curve2", "11a1", "--horizon", "200"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["level"], 121);
    assert_eq!(v["sign"], 1);
    assert_eq!(v["coefficients"][1], -4);
    assert_valid("oracle.schema.json", &v);
}

#[test]
fn config_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "horizon = 10\n").unwrap();
    let out = lsearch(&["--config", bad.to_str().unwrap(), "factors", "--prime", "3", "--level", "5"]);
    assert_eq!(out.status.code(), Some(1));

    let out = Command::new(env!("CARGO_BIN_EXE_lsearch"))
        .args(["factors", "--prime", "3", "--level", "5"])
        .env("LSEARCH_CONFIG", &bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let extra = dir.path().join("curves.toml");
    std::fs::write(&extra, "[[curves]]\nlabel = \"20a1\"\na = [0, 1, 0, 4, 4]\nconductor = 20\nroot_number = 1\n")
        .unwrap();
    let out = lsearch(&[
        "--config",
        extra.to_str().unwrap(),
        "oracle",
        "--curve1",
        "11a1",
        "--curve2",
        "20a1",
        "--horizon",
        "100",
    ]);
    assert!(out.status.success());
    assert_eq!(json_of(&out)["level"], 220);
}

#[test]
fn weights_csv_rows_determinism_and_decay() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = lsearch(&["weights", "--level", "211", "--sign", "1", "--out", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let abs: Vec<f64> = rdr.records().map(|r| r.unwrap()[3].parse::<f64>().unwrap()).collect();
    assert_eq!(abs.len(), 1000);
    // Past n = 50 the weights decay; compare window maxima to allow for oscillation.
    let window = |lo: usize| abs[lo..lo + 50].iter().cloned().fold(0.0, f64::max);
    for lo in (50..900).step_by(50) {
        assert!(window(lo + 50) < window(lo), "no decay after n = {lo}");
    }
}

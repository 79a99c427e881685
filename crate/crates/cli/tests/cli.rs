use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn linsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linsel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn linsel_ok(args: &[&str]) -> Output {
    let out = linsel(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn complexity_covers_every_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    linsel_ok(&[
        "complexity",
        "--generator",
        "hard",
        "--d-star",
        "3",
        "--gap",
        "0.1",
        "--out",
        out,
    ]);
    let rows = csv_rows(&dir.path().join("complexity.csv"));
    assert_eq!(rows[0][0], "d");
    let ds: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(ds, ["1", "2", "3", "4"]);
    let rho: Vec<f64> = rows[1..].iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(rho[3] > rho[2]);
    let doc = read_json(&dir.path().join("complexity.json"));
    assert_eq!(doc["header"]["command"], "complexity");
    assert_eq!(doc["header"]["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn reports_go_to_stdout_without_out() {
    let out = linsel_ok(&[
        "design",
        "--generator",
        "hard",
        "--d-star",
        "2",
        "--gap",
        "0.25",
        "--d",
        "2",
    ]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["header"]["command"], "design");
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"instance": {"generator": "hard", "d_star": 2, "eps": 0.25},
            "trials": 4, "seed": 3, "noise": {"kind": "none"}}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    linsel_ok(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "6",
        "--algo",
        "oracle_static",
        "--out",
        out.to_str().unwrap(),
    ]);
    let doc = read_json(&out.join("run.json"));
    assert_eq!(doc["report"]["config"]["trials"], 6);
    assert_eq!(doc["report"]["config"]["seed"], 3);
    assert_eq!(doc["header"]["seed"], 3);
    assert_eq!(doc["report"]["batch"]["error_rate"], 0.0);
    assert!(doc["report"]["config"].get("out").is_none());
    assert_eq!(csv_rows(&out.join("run.csv")).len(), 7);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"trails": 3}"#).unwrap();
    let out = linsel(&["complexity", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"]["message"].is_string());
}

#[test]
fn unknown_suite_exits_with_usage_code() {
    let out = linsel(&["validate", "no-such-suite"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn quick_suites_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = linsel(&["validate", "rounding", "monotonicity", "--out", out]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let doc = read_json(&dir.path().join("validate.json"));
    let suites = doc["report"].as_array().unwrap();
    assert_eq!(suites.len(), 2);
    assert!(suites.iter().all(|s| s["passed"] == true));
}

#[test]
fn trace_agrees_with_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    linsel_ok(&[
        "run",
        "--algo",
        "master_fc",
        "--trials",
        "10",
        "--seed",
        "2",
        "--max-ell",
        "10",
        "--trace",
        "--out",
        out,
    ]);
    let text = std::fs::read_to_string(dir.path().join("trace.jsonl")).unwrap();
    let mut lines = text.lines();
    let header: Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(header["command"], "run");
    let events: Vec<Value> = lines.map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!events.is_empty());
    let doc = read_json(&dir.path().join("run.json"));
    for o in doc["report"]["batch"]["outcomes"].as_array().unwrap() {
        let trial = o["trial"].as_u64().unwrap();
        let Some(settled) = o["first_correct_at"].as_u64() else {
            continue;
        };
        let mut pulls = 0;
        for e in events.iter().filter(|e| e["trial"] == trial) {
            let now = e["pulls_total"].as_u64().unwrap();
            assert!(now >= pulls, "pull counter went backwards");
            pulls = now;
            if e["event"] == "recommendation" && now >= settled {
                assert_eq!(e["target"], o["recommendation"]);
            }
        }
    }
}

#[test]
fn misspec_reports_each_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    linsel_ok(&[
        "misspec",
        "--generator",
        "unverifiable",
        "--dim",
        "4",
        "--levels",
        "0.5,3",
        "--out",
        out,
    ]);
    let rows = csv_rows(&dir.path().join("misspec.csv"));
    let ds: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(ds, ["1", "2", "3", "4"]);
    let doc = read_json(&dir.path().join("misspec.json"));
    let mut found: Vec<u64> = doc["report"]["profile"]["d_star"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_u64().unwrap())
        .collect();
    found.sort();
    assert_eq!(found, [1, 4]);
}

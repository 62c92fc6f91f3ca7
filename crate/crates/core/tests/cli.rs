//! Runs the `ffthom` binary end to end and checks files and exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

use ffthom::cli::ExperimentRecord;

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn ffthom(args: &[&str], config: &Path, out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_ffthom"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

const SPHERE: &str = r#"{
    "grid": { "d": 3, "n": 8 },
    "microstructure": { "type": "sphere", "rho": 10.0 },
    "reference": { "omega": 0.5 },
    "load": [1.0, 0.0, 0.0],
    "effective_tensor": true,
    "output": { "field_dump": true },
    "sweep": { "omega": [0.5, 0.7], "rho": [10.0] },
    "scaling": { "n": [4, 8], "repeats": 1 }
}"#;

#[test]
fn solve_writes_result() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SPHERE);
    let out = dir.path().join("out");
    assert_eq!(ffthom(&["solve", "--method", "bicg"], &cfg, &out), 0);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert_eq!(json["method"], "bicg");
    assert_eq!(json["converged"], true);
    assert_eq!(json["effective_tensor"]["tensor"].as_array().unwrap().len(), 3);
    assert_eq!(json["metadata"]["config_hash"].as_str().unwrap().len(), 64);
    assert!(out.join("field.txt").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let both = SPHERE.replace(r#"{ "omega": 0.5 }"#, r#"{ "omega": 0.5, "lambda": 2.0 }"#);
    assert_eq!(ffthom(&["solve"], &write_config(dir.path(), &both), &out), 2);

    let big = SPHERE.replace(r#""n": 8"#, r#""n": 128"#);
    assert_eq!(ffthom(&["solve"], &write_config(dir.path(), &big), &out), 2);

    assert_eq!(ffthom(&["solve"], &dir.path().join("missing.json"), &out), 2);

    let cfg = write_config(dir.path(), SPHERE);
    assert_eq!(ffthom(&["solve", "--method", "ffth", "--max-iter", "3"], &cfg, &out), 3);
}

#[test]
fn verify_and_fault_injection() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SPHERE);
    let good = dir.path().join("good");
    assert_eq!(ffthom(&["verify", "--seed", "7"], &cfg, &good), 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(good.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 7);
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));

    let bad = dir.path().join("bad");
    assert_eq!(ffthom(&["verify", "--inject-fault"], &cfg, &bad), 4);
}

#[test]
fn sweep_and_scaling_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SPHERE);
    let out = dir.path().join("out");
    assert_eq!(ffthom(&["sweep-omega"], &cfg, &out), 0);
    let first = ExperimentRecord::read_csv(&out.join("sweep.csv")).unwrap();
    assert_eq!(first.rows().len(), 2);
    assert!(out.join("sweep.meta.json").exists());
    assert_eq!(ffthom(&["sweep-omega"], &cfg, &out), 0);
    assert_eq!(ExperimentRecord::read_csv(&out.join("sweep.csv")).unwrap(), first);

    assert_eq!(ffthom(&["scaling"], &cfg, &out), 0);
    let scaling = ExperimentRecord::read_csv(&out.join("scaling.csv")).unwrap();
    assert_eq!(scaling.header()[0], "n");
    assert_eq!(scaling.rows()[1][1], "1536");
}

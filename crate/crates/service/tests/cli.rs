mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;
use serde_json::Value;

fn floodprio(store: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floodprio")).arg("--store").arg(store).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn run_update_export_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let store = tmp.path().join("store");
    let config = city_dir().join("config.toml");

    let v = stdout_json(&floodprio(&store, &["run", config.to_str().unwrap()]));
    assert_eq!(v["scenario_id"], "s0001");
    assert_eq!(v["version"], 1);
    assert_eq!(v["summary"]["counts"]["high_priority"], expected("step1")["counts"]["HighPriority"]);

    let flood = flood_path(2);
    let v = stdout_json(&floodprio(&store, &["update-flood", "s0001", flood.to_str().unwrap()]));
    assert_eq!(v["version"], 2);
    assert_eq!(v["monotonicity"]["immediate_increased"].as_array().unwrap().len(), 0);

    let v = stdout_json(&floodprio(&store, &["update-weights", "s0001", "0,0.6,0.66,1"]));
    assert_eq!(v["version"], 3);
    assert_eq!(v["summary"]["weights"]["low"], 0.6);

    let out_file = tmp.path().join("map.geojson");
    let out = floodprio(&store, &["export", "s0001", "--version", "2", "--out", out_file.to_str().unwrap()]);
    assert!(out.status.success());
    let map: Value = serde_json::from_slice(&std::fs::read(&out_file).unwrap()).unwrap();
    assert_eq!(map["version"], 2);
    let to_stdout = floodprio(&store, &["export", "s0001", "--version", "2"]);
    assert_eq!(to_stdout.stdout, std::fs::read(&out_file).unwrap());

    let v = stdout_json(&floodprio(&store, &["summary", "s0001"]));
    assert_eq!(v["version"], 3);
    assert_eq!(v["kind"], "weight_update");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let store = tmp.path().join("store");
    assert_eq!(floodprio(&store, &["summary", "s0009"]).status.code(), Some(3));
    assert_eq!(floodprio(&store, &["run", "/nonexistent/config.toml"]).status.code(), Some(3));

    let bad = tmp.path().join("bad.toml");
    let text = std::fs::read_to_string(city_dir().join("config.toml")).unwrap().replace("k = 3", "k = 5");
    std::fs::write(&bad, text).unwrap();
    assert_eq!(floodprio(&store, &["run", bad.to_str().unwrap()]).status.code(), Some(2));

    let config = city_dir().join("config.toml");
    assert!(floodprio(&store, &["run", config.to_str().unwrap()]).status.success());
    let out = floodprio(&store, &["update-weights", "s0001", "1,0,0,0"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    // clap rejects malformed arguments before any work
    assert_ne!(floodprio(&store, &["update-weights", "s0001", "a,b"]).status.code(), Some(0));
}

#![allow(dead_code)]

use std::path::PathBuf;

use floodprio_core::prioritizer::WeightVector;
use floodprio_service::{ScenarioConfig, ScenarioResult, ScenarioService};
use serde_json::Value;

pub const FLOOD_STEPS: usize = 5;

pub fn city_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/city")
}

pub fn flood_path(step: usize) -> PathBuf {
    city_dir().join(format!("flood_step{step}.geojson"))
}

pub fn flood_text(step: usize) -> String {
    std::fs::read_to_string(flood_path(step)).unwrap()
}

pub fn city_config(step: usize, weights: Option<WeightVector>) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::load(&city_dir().join("config.toml")).unwrap();
    cfg.inputs.flood = flood_path(step);
    if let Some(w) = weights {
        cfg.weights = w;
    }
    cfg
}

pub fn service() -> (tempfile::TempDir, ScenarioService) {
    let tmp = tempfile::tempdir().unwrap();
    let svc = ScenarioService::open(tmp.path().join("store")).unwrap();
    (tmp, svc)
}

/// Frozen output of `tests/oracle/pipeline_oracle.py`.
pub fn expected(case: &str) -> Value {
    let text = std::fs::read_to_string(city_dir().join("expected.json")).unwrap();
    let all: Value = serde_json::from_str(&text).unwrap();
    all[case].clone()
}

/// Differences between a stored result and an oracle case.
pub fn oracle_mismatches(result: &ScenarioResult, case: &Value) -> Vec<String> {
    let tiles = case["tiles"].as_array().unwrap();
    let mut out = Vec::new();
    if tiles.len() != result.tiles.len() {
        out.push(format!("tile count {} vs oracle {}", result.tiles.len(), tiles.len()));
        return out;
    }
    for (t, e) in result.tiles.iter().zip(tiles) {
        let id = t.tile_id;
        let close = |a: f64, key: &str| (a - e[key].as_f64().unwrap()).abs() <= 1e-9;
        let checks = [
            ("q", t.q as i64 == e["q"].as_i64().unwrap()),
            ("r", t.r as i64 == e["r"].as_i64().unwrap()),
            ("exposed_count", t.evidence.exposed_building_count as u64 == e["exposed_count"].as_u64().unwrap()),
            ("density", t.evidence.density.label() == e["density"].as_str().unwrap()),
            ("facility", t.evidence.facility_exposed == e["facility"].as_bool().unwrap()),
            ("immediate", close(t.evidence.immediate_unexposed, "immediate")),
            ("remote", t.evidence.remote_accessible == e["remote"].as_bool().unwrap()),
            ("pdc", close(t.pdc, "pdc")),
            ("category", t.category.label() == e["category"].as_str().unwrap()),
        ];
        for (name, ok) in checks {
            if !ok {
                out.push(format!("tile {id} {name}: {:?} vs oracle {}", t, e));
            }
        }
    }
    let c = &result.summary.counts;
    let ec = &case["counts"];
    let counts =
        [(c.high_priority, "HighPriority"), (c.priority, "Priority"), (c.exposed, "Exposed"), (c.safe, "Safe")];
    for (got, key) in counts {
        if got as u64 != ec[key].as_u64().unwrap() {
            out.push(format!("{key} count {got} vs oracle {}", ec[key]));
        }
    }
    out
}

//! Scenario operations on top of the store: create, update and query.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use floodprio_core::hexgrid::TileId;
use floodprio_core::prioritizer::{priomap_geojson, PriorityCategory, PriorityMap, TilePriority, WeightVector};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Result, ServiceError};
use crate::pipeline::{self, Computation, StaticInputs, Summary, TileResult, Timings};
use crate::store::{
    sha256_hex, InputRef, Manifest, Store, VersionKind, FLOOD_FILE, MANIFEST_FILE, PRIOMAP_FILE, RESULT_FILE,
    SCENARIO_FILE,
};

/// Changes between a flood version and its parent. A flood that only grows
/// leaves every list empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityAudit {
    pub against_version: u32,
    /// Tiles whose immediate unexposed fraction went up.
    pub immediate_increased: Vec<TileId>,
    /// Tiles that regained remote accessibility.
    pub became_accessible: Vec<TileId>,
    /// Tiles that lost exposed buildings.
    pub exposure_decreased: Vec<TileId>,
}

impl MonotonicityAudit {
    pub fn is_monotone(&self) -> bool {
        self.immediate_increased.is_empty() && self.became_accessible.is_empty() && self.exposure_decreased.is_empty()
    }

    fn compare(against_version: u32, before: &[TileResult], after: &[TileResult]) -> Self {
        let mut audit = MonotonicityAudit { against_version, ..Default::default() };
        for (b, a) in before.iter().zip(after) {
            if a.evidence.immediate_unexposed > b.evidence.immediate_unexposed {
                audit.immediate_increased.push(a.tile_id);
            }
            if a.evidence.remote_accessible && !b.evidence.remote_accessible {
                audit.became_accessible.push(a.tile_id);
            }
            if a.evidence.exposed_building_count < b.evidence.exposed_building_count {
                audit.exposure_decreased.push(a.tile_id);
            }
        }
        audit
    }
}

/// Contents of `result.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario_id: String,
    pub version: u32,
    pub kind: VersionKind,
    pub parent_version: Option<u32>,
    pub flood_version_tag: String,
    pub summary: Summary,
    pub timings: Timings,
    pub monotonicity: Option<MonotonicityAudit>,
    pub tiles: Vec<TileResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VersionInfo {
    pub version: u32,
    pub kind: VersionKind,
    pub parent_version: Option<u32>,
    pub created_unix_ms: u64,
    pub flood_version_tag: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryView {
    pub scenario_id: String,
    pub version: u32,
    pub kind: VersionKind,
    pub flood_version_tag: String,
    pub summary: Summary,
    pub timings: Timings,
    pub monotonicity: Option<MonotonicityAudit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileDetail {
    pub scenario_id: String,
    pub version: u32,
    #[serde(flatten)]
    pub tile: TileResult,
}

/// Static input files as copied into the scenario directory.
const STATIC_INPUTS: [(&str, &str); 3] = [
    ("buildings", "inputs/buildings.geojson"),
    ("facilities", "inputs/facilities.geojson"),
    ("roads", "inputs/roads.geojson"),
];
const CPT_INPUT: &str = "inputs/cpt.toml";

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

fn elapsed_ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ServiceError::not_found(format!("{}", path.display())),
        _ => ServiceError::validation("ingest", format!("{}: {e}", path.display())),
    })
}

/// Scenario service. Cheap to clone; clones share the store and locks.
#[derive(Clone)]
pub struct ScenarioService {
    store: Store,
    locks: Arc<Mutex<HashMap<String, Arc<Mutex<()>>>>>,
}

impl ScenarioService {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        Ok(ScenarioService { store: Store::open(root)?, locks: Arc::default() })
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    fn lock(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(id.to_string()).or_default().clone()
    }

    /// Config of a stored scenario with absolute input paths.
    pub fn config(&self, id: &str) -> Result<ScenarioConfig> {
        ScenarioConfig::load(&self.store.scenario_dir(id)?.join(SCENARIO_FILE))
    }

    fn static_inputs(&self, id: &str, cfg: &ScenarioConfig) -> Result<StaticInputs> {
        let dir = self.store.scenario_dir(id)?;
        let [b, f, r] = STATIC_INPUTS.map(|(_, rel)| dir.join(rel));
        StaticInputs::load(cfg, &b, &f, &r, cfg.inputs.cpt_config.as_deref())
    }

    /// Creates a scenario from a config and computes its first version.
    pub fn run_scenario(&self, cfg: &ScenarioConfig) -> Result<ScenarioResult> {
        let t = Instant::now();
        cfg.validate()?;
        let flood_text = read_text(&cfg.inputs.flood)?;
        let inputs = StaticInputs::load(
            cfg,
            &cfg.inputs.buildings,
            &cfg.inputs.facilities,
            &cfg.inputs.roads,
            cfg.inputs.cpt_config.as_deref(),
        )?;
        let flood = pipeline::parse_flood(cfg, &flood_text)?;
        let ingest_ms = elapsed_ms(t);
        let computation = pipeline::compute(cfg, &inputs, &flood, ingest_ms)?;

        let (id, dir) = self.store.allocate()?;
        let result = (|| {
            fs::create_dir(dir.join("inputs"))?;
            let mut stored = cfg.clone();
            let sources = [&cfg.inputs.buildings, &cfg.inputs.facilities, &cfg.inputs.roads];
            for ((_, rel), src) in STATIC_INPUTS.iter().zip(sources) {
                fs::copy(src, dir.join(rel))?;
            }
            stored.inputs.buildings = STATIC_INPUTS[0].1.into();
            stored.inputs.facilities = STATIC_INPUTS[1].1.into();
            stored.inputs.roads = STATIC_INPUTS[2].1.into();
            stored.inputs.flood = format!("v1/{FLOOD_FILE}").into();
            if let Some(src) = &cfg.inputs.cpt_config {
                fs::copy(src, dir.join(CPT_INPUT))?;
                stored.inputs.cpt_config = Some(CPT_INPUT.into());
            }
            fs::write(dir.join(SCENARIO_FILE), stored.to_toml_string())?;
            let lock = self.lock(&id);
            let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
            self.persist(&id, cfg, 1, VersionKind::Run, None, &flood_text, &flood.version_tag, computation, None)
        })();
        if result.is_err() {
            let _ = fs::remove_dir_all(&dir);
        }
        result
    }

    /// Recomputes the scenario against a new flood extent.
    pub fn update_flood(&self, id: &str, flood_text: &str) -> Result<ScenarioResult> {
        let lock = self.lock(id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let t = Instant::now();
        let cfg = self.config(id)?;
        let parent = self.store.latest(id)?;
        let previous = self.result(id, Some(parent))?;
        let inputs = self.static_inputs(id, &cfg)?;
        let flood = pipeline::parse_flood(&cfg, flood_text)?;
        let ingest_ms = elapsed_ms(t);
        let mut cfg_now = cfg.clone();
        cfg_now.weights = previous.summary.weights;
        let computation = pipeline::compute(&cfg_now, &inputs, &flood, ingest_ms)?;
        let audit = MonotonicityAudit::compare(parent, &previous.tiles, &computation.tiles);
        let tag = flood.version_tag.clone();
        self.persist(
            id,
            &cfg,
            parent + 1,
            VersionKind::FloodUpdate,
            Some(parent),
            flood_text,
            &tag,
            computation,
            Some(audit),
        )
    }

    /// Rescores the latest version with new weights, reusing its posteriors.
    pub fn update_weights(&self, id: &str, weights: &WeightVector) -> Result<ScenarioResult> {
        weights.validate().map_err(|e| ServiceError::validation("weights", e.to_string()))?;
        let lock = self.lock(id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let cfg = self.config(id)?;
        let parent = self.store.latest(id)?;
        let previous = self.result(id, Some(parent))?;
        let flood_text = String::from_utf8(self.store.read(id, parent, FLOOD_FILE)?)
            .map_err(|e| ServiceError::internal(format!("flood snapshot: {e}")))?;
        let computation = pipeline::reweight(&previous.tiles, &previous.summary, weights)?;
        self.persist(
            id,
            &cfg,
            parent + 1,
            VersionKind::WeightUpdate,
            Some(parent),
            &flood_text,
            &previous.flood_version_tag,
            computation,
            None,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn persist(
        &self,
        id: &str,
        cfg: &ScenarioConfig,
        version: u32,
        kind: VersionKind,
        parent_version: Option<u32>,
        flood_text: &str,
        flood_version_tag: &str,
        computation: Computation,
        monotonicity: Option<MonotonicityAudit>,
    ) -> Result<ScenarioResult> {
        let Computation { tiles, summary, timings } = computation;
        let result = ScenarioResult {
            scenario_id: id.to_string(),
            version,
            kind,
            parent_version,
            flood_version_tag: flood_version_tag.to_string(),
            summary,
            timings,
            monotonicity,
            tiles,
        };
        let priomap = render_priomap(cfg, &result, flood_version_tag)?;
        let dir = self.store.scenario_dir(id)?;
        let mut inputs = Vec::new();
        for (role, rel) in STATIC_INPUTS {
            inputs.push(InputRef {
                role: role.into(),
                file: rel.into(),
                sha256: sha256_hex(&fs::read(dir.join(rel))?),
            });
        }
        if dir.join(CPT_INPUT).is_file() {
            inputs.push(InputRef {
                role: "cpt".into(),
                file: CPT_INPUT.into(),
                sha256: sha256_hex(&fs::read(dir.join(CPT_INPUT))?),
            });
        }
        inputs.push(InputRef {
            role: "flood".into(),
            file: format!("v{version}/{FLOOD_FILE}"),
            sha256: sha256_hex(flood_text.as_bytes()),
        });
        let mut effective = cfg.clone();
        effective.weights = result.summary.weights;
        let manifest = Manifest {
            scenario_id: id.to_string(),
            version,
            kind,
            parent_version,
            created_unix_ms: now_ms(),
            config_sha256: sha256_hex(effective.to_toml_string().as_bytes()),
            flood_version_tag: flood_version_tag.to_string(),
            inputs,
            timings: result.timings.clone(),
        };
        let manifest = toml::to_string(&manifest).map_err(|e| ServiceError::internal(e.to_string()))?;
        let json = serde_json::to_vec(&result).map_err(|e| ServiceError::internal(e.to_string()))?;
        self.store.write_version(
            id,
            version,
            &[
                (MANIFEST_FILE, manifest.as_bytes()),
                (RESULT_FILE, &json),
                (PRIOMAP_FILE, &priomap),
                (FLOOD_FILE, flood_text.as_bytes()),
            ],
        )?;
        Ok(result)
    }

    pub fn result(&self, id: &str, version: Option<u32>) -> Result<ScenarioResult> {
        let v = self.store.resolve(id, version)?;
        serde_json::from_slice(&self.store.read(id, v, RESULT_FILE)?)
            .map_err(|e| ServiceError::internal(format!("result of {id} v{v}: {e}")))
    }

    pub fn list_versions(&self, id: &str) -> Result<Vec<VersionInfo>> {
        self.store
            .versions(id)?
            .into_iter()
            .map(|v| {
                let m = self.store.manifest(id, v)?;
                Ok(VersionInfo {
                    version: m.version,
                    kind: m.kind,
                    parent_version: m.parent_version,
                    created_unix_ms: m.created_unix_ms,
                    flood_version_tag: m.flood_version_tag,
                })
            })
            .collect()
    }

    /// Stored GeoJSON bytes of a version, latest when `version` is `None`.
    pub fn get_priomap(&self, id: &str, version: Option<u32>) -> Result<(u32, Vec<u8>)> {
        let v = self.store.resolve(id, version)?;
        Ok((v, self.store.read(id, v, PRIOMAP_FILE)?))
    }

    pub fn get_tile_detail(&self, id: &str, tile: u32, version: Option<u32>) -> Result<TileDetail> {
        let result = self.result(id, version)?;
        let tile = result
            .tiles
            .into_iter()
            .find(|t| t.tile_id == TileId(tile))
            .ok_or_else(|| ServiceError::not_found(format!("tile {tile} in scenario `{id}`")))?;
        Ok(TileDetail { scenario_id: result.scenario_id, version: result.version, tile })
    }

    pub fn get_summary(&self, id: &str, version: Option<u32>) -> Result<SummaryView> {
        let r = self.result(id, version)?;
        Ok(SummaryView {
            scenario_id: r.scenario_id,
            version: r.version,
            kind: r.kind,
            flood_version_tag: r.flood_version_tag,
            summary: r.summary,
            timings: r.timings,
            monotonicity: r.monotonicity,
        })
    }
}

/// Priority map GeoJSON. Depends only on the inputs and the version number.
fn render_priomap(cfg: &ScenarioConfig, result: &ScenarioResult, flood_version_tag: &str) -> Result<Vec<u8>> {
    let grid = pipeline::build_grid(cfg)?;
    let map = PriorityMap {
        tiles: result
            .tiles
            .iter()
            .map(|t| TilePriority { tile_id: t.tile_id, posterior: t.posterior, pdc: t.pdc, category: t.category })
            .collect(),
        weights: result.summary.weights,
        counts: result.summary.counts,
        clustering: result.summary.clustering.clone(),
    };
    let mut extra = serde_json::Map::new();
    extra.insert("version".into(), result.version.into());
    extra.insert("flood_version_tag".into(), flood_version_tag.into());
    extra.insert("crs".into(), cfg.crs.clone().into());
    extra.insert("k".into(), result.summary.k.into());
    extra.insert(
        "density_thresholds".into(),
        serde_json::to_value(&result.summary.density_thresholds).map_err(|e| ServiceError::internal(e.to_string()))?,
    );
    let value = priomap_geojson(&grid, &map, extra);
    let mut bytes = serde_json::to_vec(&value).map_err(|e| ServiceError::internal(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Category of every tile in grid order.
pub fn categories(result: &ScenarioResult) -> Vec<PriorityCategory> {
    result.tiles.iter().map(|t| t.category).collect()
}

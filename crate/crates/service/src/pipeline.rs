//! Ingest, evidence, inference and prioritisation for one flood snapshot.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use floodprio_core::bayesnet::risk::{build_risk_network, infer_risk, tile_evidence, CptConfig, RiskPosterior};
use floodprio_core::bayesnet::DiscreteNetwork;
use floodprio_core::evidence::{build_evidence, DensityThresholds, EvidenceBundle, EvidenceInputs};
use floodprio_core::geo_ingest::{
    check_crs, load_buildings, load_facilities, load_road_network, snap_destinations, FloodLayer, RoadNetwork, SiteSet,
};
use floodprio_core::hexgrid::{HexGrid, TileId};
use floodprio_core::prioritizer::{prioritize, CategoryCounts, ClusterMetadata, PriorityCategory, WeightVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Result, ServiceError};

/// Wall-clock milliseconds per stage. Stages not run on a path stay zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub ingest_ms: f64,
    pub grid_ms: f64,
    pub evidence_ms: f64,
    pub inference_ms: f64,
    pub prioritize_ms: f64,
    pub total_ms: f64,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Static inputs shared by every version of a scenario.
pub struct StaticInputs {
    pub buildings: SiteSet,
    pub facilities: SiteSet,
    pub roads: RoadNetwork,
    pub cpt: CptConfig,
}

fn ingest_err(e: impl std::fmt::Display) -> ServiceError {
    ServiceError::validation("ingest", e.to_string())
}

impl StaticInputs {
    pub fn load(
        cfg: &ScenarioConfig,
        buildings: &Path,
        facilities: &Path,
        roads: &Path,
        cpt: Option<&Path>,
    ) -> Result<Self> {
        let buildings = load_buildings(buildings).map_err(ingest_err)?;
        check_crs("buildings", buildings.crs.as_deref(), &cfg.crs).map_err(ingest_err)?;
        let facilities = load_facilities(facilities).map_err(ingest_err)?;
        check_crs("facilities", facilities.crs.as_deref(), &cfg.crs).map_err(ingest_err)?;
        let roads = load_road_network(roads).map_err(ingest_err)?;
        check_crs("roads", roads.crs.as_deref(), &cfg.crs).map_err(ingest_err)?;
        let cpt = match cpt {
            Some(p) => CptConfig::load(p).map_err(|e| ServiceError::validation("network", e.to_string()))?,
            None => CptConfig::default(),
        };
        Ok(StaticInputs { buildings, facilities, roads, cpt })
    }
}

pub fn parse_flood(cfg: &ScenarioConfig, text: &str) -> Result<FloodLayer> {
    let flood = FloodLayer::from_geojson_str(text).map_err(ingest_err)?;
    check_crs("flood", flood.crs.as_deref(), &cfg.crs).map_err(ingest_err)?;
    Ok(flood)
}

pub fn build_grid(cfg: &ScenarioConfig) -> Result<HexGrid> {
    HexGrid::build(cfg.bbox_rect(), cfg.max_width).map_err(|e| ServiceError::validation("grid", e.to_string()))
}

pub fn build_network(cpt: &CptConfig) -> Result<DiscreteNetwork> {
    build_risk_network(cpt).map_err(|e| ServiceError::validation("network", e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileResult {
    pub tile_id: TileId,
    pub q: i32,
    pub r: i32,
    pub evidence: EvidenceBundle,
    pub posterior: RiskPosterior,
    pub pdc: f64,
    pub category: PriorityCategory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub tile_count: usize,
    pub counts: CategoryCounts,
    pub weights: WeightVector,
    pub k: usize,
    /// Absent when no tile has exposed buildings.
    pub density_thresholds: Option<DensityThresholds>,
    pub clustering: ClusterMetadata,
}

/// Everything computed for one flood snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct Computation {
    pub tiles: Vec<TileResult>,
    pub summary: Summary,
    pub timings: Timings,
}

/// Full pipeline for one flood snapshot. `ingest_ms` is the caller's.
pub fn compute(cfg: &ScenarioConfig, inputs: &StaticInputs, flood: &FloodLayer, ingest_ms: f64) -> Result<Computation> {
    let start = Instant::now();
    let mut timings = Timings { ingest_ms, ..Timings::default() };

    let t = Instant::now();
    let grid = build_grid(cfg)?;
    let network = build_network(&inputs.cpt)?;
    timings.grid_ms = ms(t);

    let t = Instant::now();
    let destinations = snap_destinations(&inputs.roads, flood, &cfg.destination_points(), cfg.max_snap)
        .map_err(|e| ServiceError::validation("evidence", e.to_string()))?;
    let evidence = build_evidence(
        &grid,
        EvidenceInputs {
            flood,
            buildings: &inputs.buildings,
            facilities: &inputs.facilities,
            network: &inputs.roads,
            destinations: &destinations,
        },
        cfg.percentiles,
    );
    timings.evidence_ms = ms(t);

    let t = Instant::now();
    let posteriors = evidence
        .bundles
        .par_iter()
        .map(|b| infer_risk(&network, &tile_evidence(b)))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| ServiceError::internal(format!("inference: {e}")))?;
    timings.inference_ms = ms(t);

    let t = Instant::now();
    let posts: BTreeMap<TileId, RiskPosterior> =
        evidence.bundles.iter().zip(&posteriors).map(|(b, p)| (b.tile_id, *p)).collect();
    let map = floodprio_core::prioritizer::build_priority_map(&grid, &posts, &cfg.weights, cfg.k)
        .map_err(|e| ServiceError::validation("prioritize", e.to_string()))?;
    timings.prioritize_ms = ms(t);

    let tiles = grid
        .tiles()
        .iter()
        .zip(evidence.bundles)
        .zip(&map.tiles)
        .map(|((tile, evidence), p)| TileResult {
            tile_id: tile.id,
            q: tile.axial.q,
            r: tile.axial.r,
            evidence,
            posterior: p.posterior,
            pdc: p.pdc,
            category: p.category,
        })
        .collect();
    let summary = Summary {
        tile_count: grid.len(),
        counts: map.counts,
        weights: cfg.weights,
        k: cfg.k,
        density_thresholds: evidence.thresholds,
        clustering: map.clustering,
    };
    timings.total_ms = ingest_ms + ms(start);
    Ok(Computation { tiles, summary, timings })
}

/// Rescores stored posteriors with new weights; evidence and posteriors are
/// carried over untouched.
pub fn reweight(tiles: &[TileResult], previous: &Summary, weights: &WeightVector) -> Result<Computation> {
    let start = Instant::now();
    let posts = tiles.iter().map(|t| (t.tile_id, t.posterior)).collect();
    let map = prioritize(posts, weights, previous.k).map_err(|e| ServiceError::validation("weights", e.to_string()))?;
    let prioritize_ms = ms(start);
    let tiles = tiles
        .iter()
        .zip(&map.tiles)
        .map(|(t, p)| TileResult { pdc: p.pdc, category: p.category, ..t.clone() })
        .collect();
    let summary = Summary { counts: map.counts, weights: *weights, clustering: map.clustering, ..previous.clone() };
    Ok(Computation { tiles, summary, timings: Timings { prioritize_ms, total_ms: ms(start), ..Timings::default() } })
}

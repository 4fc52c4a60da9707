//! GIS models turning the flood snapshot and static geodata into per-tile
//! evidence for the four root nodes of the risk network.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::geo_ingest::{DestinationSet, FloodLayer, RoadNetwork, SiteSet};
use crate::geometry::{self, Point};
use crate::hexgrid::{GridError, HexGrid, TileId};

#[derive(Debug, Error, PartialEq)]
pub enum EvidenceError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("percentile levels must satisfy 0 < medium < high < 1, got {medium} and {high}")]
    InvalidLevels { medium: f64, high: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DensityClass {
    None,
    Low,
    Medium,
    High,
}

impl DensityClass {
    pub const ALL: [DensityClass; 4] =
        [DensityClass::None, DensityClass::Low, DensityClass::Medium, DensityClass::High];

    pub fn label(self) -> &'static str {
        match self {
            DensityClass::None => "None",
            DensityClass::Low => "Low",
            DensityClass::Medium => "Medium",
            DensityClass::High => "High",
        }
    }
}

impl fmt::Display for DensityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Percentile levels splitting exposed tiles into Low / Medium / High.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercentileLevels {
    pub medium: f64,
    pub high: f64,
}

impl Default for PercentileLevels {
    fn default() -> Self {
        PercentileLevels { medium: 0.75, high: 0.90 }
    }
}

impl PercentileLevels {
    pub fn new(medium: f64, high: f64) -> Result<Self, EvidenceError> {
        if !(0.0 < medium && medium < high && high < 1.0) {
            return Err(EvidenceError::InvalidLevels { medium, high });
        }
        Ok(PercentileLevels { medium, high })
    }
}

pub const PERCENTILE_METHOD: &str = "nearest-rank";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityThresholds {
    /// Counts above this are at least Medium.
    pub p_med_count: u32,
    /// Counts above this are High.
    pub p_high_count: u32,
    pub levels: PercentileLevels,
    pub percentile_method: String,
    /// Number of tiles with at least one exposed building.
    pub exposed_tiles: usize,
}

/// Nearest-rank percentile: the value at rank `ceil(p * n)` of an ascending
/// sample. A small guard keeps `0.9 * 100` at rank 90 despite rounding.
pub fn nearest_rank(sorted: &[u32], p: f64) -> Option<u32> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len();
    let rank = ((p * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    Some(sorted[rank - 1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityClassification {
    pub classes: Vec<DensityClass>,
    /// Absent when no tile has an exposed building.
    pub thresholds: Option<DensityThresholds>,
}

/// Classifies exposed-building counts. Percentiles are taken over exposed
/// tiles only (count >= 1).
pub fn classify_density(counts: &[u32], levels: PercentileLevels) -> DensityClassification {
    let mut exposed: Vec<u32> = counts.iter().copied().filter(|&c| c > 0).collect();
    exposed.sort_unstable();
    let thresholds = match (nearest_rank(&exposed, levels.medium), nearest_rank(&exposed, levels.high)) {
        (Some(p_med_count), Some(p_high_count)) => Some(DensityThresholds {
            p_med_count,
            p_high_count,
            levels,
            percentile_method: PERCENTILE_METHOD.to_owned(),
            exposed_tiles: exposed.len(),
        }),
        _ => None,
    };
    let classes = counts
        .iter()
        .map(|&c| match &thresholds {
            _ if c == 0 => DensityClass::None,
            Some(t) if c > t.p_high_count => DensityClass::High,
            Some(t) if c > t.p_med_count => DensityClass::Medium,
            _ => DensityClass::Low,
        })
        .collect();
    DensityClassification { classes, thresholds }
}

/// Tiles of the grid holding each flooded point, ignoring points outside
/// every tile.
fn flooded_sites_per_tile(grid: &HexGrid, sites: &SiteSet, flood: &FloodLayer) -> Vec<u32> {
    let hits: Vec<TileId> = if flood.is_empty() {
        Vec::new()
    } else {
        sites
            .sites
            .par_iter()
            .filter(|s| flood.contains(&s.location))
            .filter_map(|s| grid.locate(&s.location))
            .collect()
    };
    let mut counts = vec![0u32; grid.len()];
    for id in hits {
        counts[id.index()] += 1;
    }
    counts
}

/// Number of buildings per tile whose centroid lies in the flood extent.
pub fn exposed_building_counts(grid: &HexGrid, buildings: &SiteSet, flood: &FloodLayer) -> Vec<u32> {
    flooded_sites_per_tile(grid, buildings, flood)
}

/// Whether each tile holds at least one flooded care facility.
pub fn facility_presence(grid: &HexGrid, facilities: &SiteSet, flood: &FloodLayer) -> Vec<bool> {
    flooded_sites_per_tile(grid, facilities, flood).into_iter().map(|c| c > 0).collect()
}

/// Relative slack below which a fraction is snapped onto 0 or 1.
const FRACTION_SNAP: f64 = 1e-12;

fn clean_fraction(f: f64) -> f64 {
    if f < FRACTION_SNAP {
        0.0
    } else if f > 1.0 - FRACTION_SNAP {
        1.0
    } else {
        f
    }
}

/// Share of a convex counter-clockwise polygon covered by the flood extent.
pub fn flood_fraction(poly: &[Point], flood: &FloodLayer) -> f64 {
    let area = geometry::signed_area(poly).abs();
    if area == 0.0 || flood.is_empty() {
        return 0.0;
    }
    clean_fraction(flood.area_within_convex(poly) / area)
}

/// Flooded area inside each tile.
pub fn tile_flooded_areas(grid: &HexGrid, flood: &FloodLayer) -> Vec<f64> {
    if flood.is_empty() {
        return vec![0.0; grid.len()];
    }
    let full = grid.tile_area();
    grid.tiles().par_iter().map(|t| flood.area_within_convex(&t.polygon).clamp(0.0, full)).collect()
}

fn neighbourhood_unexposed(grid: &HexGrid, flooded: &[f64], id: TileId) -> Result<f64, GridError> {
    let ring = grid.neighbors(id)?;
    let total = grid.tile_area() * (ring.len() + 1) as f64;
    let wet: f64 = flooded[id.index()] + ring.iter().map(|n| flooded[n.index()]).sum::<f64>();
    Ok(clean_fraction(1.0 - wet / total))
}

/// Unflooded share of a tile together with its grid neighbours. Neighbour
/// cells outside the grid are not part of the neighbourhood.
pub fn immediate_unexposed_fraction(grid: &HexGrid, flood: &FloodLayer, id: TileId) -> Result<f64, GridError> {
    let tile = grid.tile(id)?;
    let ring = grid.neighbors(id)?;
    let full = grid.tile_area();
    let mut wet = flood.area_within_convex(&tile.polygon).clamp(0.0, full);
    for n in &ring {
        wet += flood.area_within_convex(&grid.tile(*n)?.polygon).clamp(0.0, full);
    }
    Ok(clean_fraction(1.0 - wet / (full * (ring.len() + 1) as f64)))
}

/// [`immediate_unexposed_fraction`] for every tile, sharing per-tile areas.
pub fn immediate_unexposed_fractions(grid: &HexGrid, flood: &FloodLayer) -> Vec<f64> {
    let flooded = tile_flooded_areas(grid, flood);
    grid.tiles()
        .iter()
        .map(|t| neighbourhood_unexposed(grid, &flooded, t.id).expect("tile ids come from the grid"))
        .collect()
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Residual road graph after the flood: which nodes survive and their
/// connected-component labels.
#[derive(Clone, Debug)]
pub struct ResidualNetwork {
    /// `None` for flooded nodes.
    pub component: Vec<Option<usize>>,
    pub removed_segments: usize,
}

/// Removes flooded nodes and every segment whose polyline touches the flood,
/// then labels connected components. Segments are undirected.
pub fn residual_network(net: &RoadNetwork, flood: &FloodLayer) -> ResidualNetwork {
    let nodes = net.nodes();
    let flooded: Vec<bool> = nodes.par_iter().map(|n| flood.contains(&n.location)).collect();
    let blocked: Vec<bool> = net
        .segments()
        .par_iter()
        .map(|s| flooded[s.from] || flooded[s.to] || flood.intersects_polyline(&s.geometry))
        .collect();
    let mut sets = DisjointSet::new(nodes.len());
    for (seg, &cut) in net.segments().iter().zip(&blocked) {
        if !cut {
            sets.union(seg.from, seg.to);
        }
    }
    let component = (0..nodes.len()).map(|i| (!flooded[i]).then(|| sets.find(i))).collect();
    ResidualNetwork { component, removed_segments: blocked.iter().filter(|&&b| b).count() }
}

/// A tile is accessible iff one of its unflooded road nodes shares a residual
/// component with an unflooded destination node. Tiles without such nodes
/// are inaccessible.
pub fn remote_accessibility(
    grid: &HexGrid,
    net: &RoadNetwork,
    flood: &FloodLayer,
    dests: &DestinationSet,
) -> Vec<bool> {
    let residual = residual_network(net, flood);
    let mut reachable_roots: Vec<usize> =
        dests.destinations.iter().filter_map(|d| residual.component[d.node]).collect();
    reachable_roots.sort_unstable();
    reachable_roots.dedup();
    let mut accessible = vec![false; grid.len()];
    for (node, comp) in net.nodes().iter().zip(&residual.component) {
        let Some(root) = comp else { continue };
        if reachable_roots.binary_search(root).is_err() {
            continue;
        }
        if let Some(tile) = grid.locate(&node.location) {
            accessible[tile.index()] = true;
        }
    }
    accessible
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceBundle {
    pub tile_id: TileId,
    pub density: DensityClass,
    pub facility_exposed: bool,
    /// Probability that unexposed area is reachable in the immediate vicinity.
    pub immediate_unexposed: f64,
    pub remote_accessible: bool,
    pub exposed_building_count: u32,
}

#[derive(Clone, Copy, Debug)]
pub struct EvidenceInputs<'a> {
    pub flood: &'a FloodLayer,
    pub buildings: &'a SiteSet,
    pub facilities: &'a SiteSet,
    pub network: &'a RoadNetwork,
    pub destinations: &'a DestinationSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSet {
    pub bundles: Vec<EvidenceBundle>,
    pub thresholds: Option<DensityThresholds>,
}

/// Runs the four GIS models and assembles one bundle per tile.
pub fn build_evidence(grid: &HexGrid, inputs: EvidenceInputs<'_>, levels: PercentileLevels) -> EvidenceSet {
    let counts = exposed_building_counts(grid, inputs.buildings, inputs.flood);
    let density = classify_density(&counts, levels);
    let facilities = facility_presence(grid, inputs.facilities, inputs.flood);
    let immediate = immediate_unexposed_fractions(grid, inputs.flood);
    let remote = remote_accessibility(grid, inputs.network, inputs.flood, inputs.destinations);
    let bundles = grid
        .tiles()
        .iter()
        .map(|t| {
            let i = t.id.index();
            EvidenceBundle {
                tile_id: t.id,
                density: density.classes[i],
                facility_exposed: facilities[i],
                immediate_unexposed: immediate[i],
                remote_accessible: remote[i],
                exposed_building_count: counts[i],
            }
        })
        .collect();
    EvidenceSet { bundles, thresholds: density.thresholds }
}

/// Closes an open ring into GeoJSON coordinates.
pub fn ring_coordinates(ring: &[Point]) -> Vec<[f64; 2]> {
    ring.iter().chain(ring.first()).map(|p| [p.x, p.y]).collect()
}

/// Per-tile evidence as a GeoJSON feature collection.
pub fn evidence_geojson(grid: &HexGrid, evidence: &EvidenceSet) -> serde_json::Value {
    let features: Vec<_> = evidence
        .bundles
        .iter()
        .map(|b| {
            let tile = &grid.tiles()[b.tile_id.index()];
            json!({
                "type": "Feature",
                "id": b.tile_id.0,
                "geometry": {"type": "Polygon", "coordinates": [ring_coordinates(&tile.polygon)]},
                "properties": {
                    "q": tile.axial.q,
                    "r": tile.axial.r,
                    "density": b.density.label(),
                    "facility_exposed": b.facility_exposed,
                    "immediate_unexposed": b.immediate_unexposed,
                    "remote_accessible": b.remote_accessible,
                    "exposed_count": b.exposed_building_count,
                }
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "thresholds": evidence.thresholds, "features": features})
}

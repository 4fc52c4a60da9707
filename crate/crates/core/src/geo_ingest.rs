//! GeoJSON loaders for the flood extent, buildings, care facilities and the
//! road network, plus destination snapping.
//!
//! All layers are expected in one projected metric CRS. A layer may declare
//! its CRS through the legacy `crs` member
//! (`{"type": "name", "properties": {"name": "EPSG:25832"}}`); the pipeline
//! only checks that declared labels agree. Invalid geometry is rejected and
//! never repaired.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use geojson::{feature::Id, Feature, FeatureCollection, GeoJson, JsonObject, Value};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{self, Containment, Point, Polygon, Rect};

/// Maximum distance between a segment's polyline end and its node.
pub const ENDPOINT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("GeoJSON parse error: {0}")]
    Parse(String),
    #[error("feature {feature}: unsupported geometry {kind} ({context})")]
    UnsupportedGeometry { feature: usize, kind: String, context: &'static str },
    #[error("feature {feature}, ring {ring}: {reason}")]
    InvalidRing { feature: usize, ring: usize, reason: String },
    #[error("flood polygons {first} and {second} overlap")]
    OverlappingPolygons { first: usize, second: usize },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("feature {feature}: {reason}")]
    InvalidFeature { feature: usize, reason: String },
    #[error("segment `{segment}` references missing node {node}")]
    DanglingSegment { segment: String, node: i64 },
    #[error("segment `{segment}`: polyline end does not coincide with node {node}")]
    EndpointMismatch { segment: String, node: i64 },
    #[error("no destinations given")]
    NoDestinations,
    #[error("destination `{label}`: no road node within {max_snap} m")]
    NoNodeWithinSnap { label: String, max_snap: f64 },
    #[error("destination `{label}`: nearest road node {node} is flooded")]
    FloodedDestination { label: String, node: i64 },
    #[error("layer `{layer}` declares CRS `{found}`, expected `{expected}`")]
    CrsMismatch { layer: String, expected: String, found: String },
}

pub type Result<T> = std::result::Result<T, IngestError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })
}

fn parse_collection(text: &str) -> Result<FeatureCollection> {
    match text.parse::<GeoJson>().map_err(|e| IngestError::Parse(e.to_string()))? {
        GeoJson::FeatureCollection(fc) => Ok(fc),
        GeoJson::Feature(f) => Ok(FeatureCollection { bbox: None, features: vec![f], foreign_members: None }),
        GeoJson::Geometry(g) => Ok(FeatureCollection {
            bbox: None,
            features: vec![Feature {
                bbox: None,
                geometry: Some(g),
                id: None,
                properties: None,
                foreign_members: None,
            }],
            foreign_members: None,
        }),
    }
}

fn declared_crs(members: &Option<JsonObject>) -> Option<String> {
    members.as_ref()?.get("crs")?.get("properties")?.get("name")?.as_str().map(str::to_owned)
}

/// Fails when a layer declares a CRS label different from `expected`.
/// Layers without a declaration are accepted.
pub fn check_crs(layer: &str, declared: Option<&str>, expected: &str) -> Result<()> {
    match declared {
        Some(found) if found != expected => Err(IngestError::CrsMismatch {
            layer: layer.to_owned(),
            expected: expected.to_owned(),
            found: found.to_owned(),
        }),
        _ => Ok(()),
    }
}

fn position(pos: &[f64], feature: usize) -> Result<Point> {
    match pos {
        [x, y, ..] if x.is_finite() && y.is_finite() => Ok(Point::new(*x, *y)),
        _ => Err(IngestError::InvalidFeature { feature, reason: "position needs two finite coordinates".into() }),
    }
}

fn feature_id(f: &Feature) -> Option<String> {
    match f.id.as_ref()? {
        Id::String(s) => Some(s.clone()),
        Id::Number(n) => Some(n.to_string()),
    }
}

fn int_property(f: &Feature, key: &str, feature: usize) -> Result<Option<i64>> {
    let Some(v) = f.properties.as_ref().and_then(|p| p.get(key)) else { return Ok(None) };
    v.as_i64()
        .map(Some)
        .ok_or_else(|| IngestError::InvalidFeature { feature, reason: format!("property `{key}` must be an integer") })
}

/// Turns a GeoJSON polygon into an open ring structure, validating closure
/// and simplicity of each ring and hole containment.
fn polygon_from_rings(rings: &[Vec<Vec<f64>>], feature: usize) -> Result<Polygon> {
    let mut parsed = Vec::with_capacity(rings.len());
    for (ri, ring) in rings.iter().enumerate() {
        let bad = |reason: &str| IngestError::InvalidRing { feature, ring: ri, reason: reason.to_owned() };
        if ring.len() < 4 {
            return Err(bad("a ring needs at least four positions"));
        }
        let pts = ring.iter().map(|p| position(p, feature)).collect::<Result<Vec<_>>>()?;
        if pts.first() != pts.last() {
            return Err(bad("ring is not closed"));
        }
        let open = pts[..pts.len() - 1].to_vec();
        if let Some((a, b)) = geometry::first_self_intersection(&open) {
            return Err(bad(&format!("ring is self-intersecting (edges {a} and {b})")));
        }
        if geometry::signed_area(&open) == 0.0 {
            return Err(bad("ring has zero area"));
        }
        parsed.push(geometry::to_ccw(open));
    }
    let Some(exterior) = parsed.first().cloned() else {
        return Err(IngestError::InvalidRing { feature, ring: 0, reason: "polygon has no rings".into() });
    };
    let holes: Vec<Vec<Point>> = parsed[1..].to_vec();
    for (hi, hole) in holes.iter().enumerate() {
        let ring = hi + 1;
        let outside = hole.iter().any(|p| geometry::locate_in_ring(p, &exterior) == Containment::Outside);
        if outside || rings_cross(hole, &exterior) {
            return Err(IngestError::InvalidRing { feature, ring, reason: "hole is not inside the outer ring".into() });
        }
        for other in &holes[..hi] {
            if rings_cross(hole, other)
                || hole.iter().any(|p| geometry::locate_in_ring(p, other) == Containment::Inside)
                || other.iter().any(|p| geometry::locate_in_ring(p, hole) == Containment::Inside)
            {
                return Err(IngestError::InvalidRing { feature, ring, reason: "holes overlap".into() });
            }
        }
    }
    Ok(Polygon::new(exterior, holes))
}

fn rings_cross(a: &[Point], b: &[Point]) -> bool {
    let (n, m) = (a.len(), b.len());
    (0..n).any(|i| (0..m).any(|j| geometry::segments_cross(&a[i], &a[(i + 1) % n], &b[j], &b[(j + 1) % m])))
}

/// Interior of `p` strictly contains `q` (excluding boundaries and holes).
fn strictly_inside(q: &Point, p: &Polygon) -> bool {
    geometry::locate_in_ring(q, &p.exterior) == Containment::Inside
        && p.holes.iter().all(|h| geometry::locate_in_ring(q, h) == Containment::Outside)
}

/// Flood extent: polygons with holes, pairwise interior-disjoint.
#[derive(Clone, Debug, PartialEq)]
pub struct FloodLayer {
    polygons: Vec<Polygon>,
    bboxes: Vec<Rect>,
    pub version_tag: String,
    pub crs: Option<String>,
}

impl FloodLayer {
    /// Builds a validated layer from polygons. Fails on overlapping polygons.
    pub fn new(polygons: Vec<Polygon>, version_tag: impl Into<String>) -> Result<FloodLayer> {
        let bboxes: Vec<Rect> = polygons.iter().map(|p| p.bbox().expect("validated polygon")).collect();
        for i in 0..polygons.len() {
            for j in (i + 1)..polygons.len() {
                if !bboxes[i].intersects(&bboxes[j]) {
                    continue;
                }
                let (a, b) = (&polygons[i], &polygons[j]);
                let crossing = a.rings().any(|ra| b.rings().any(|rb| rings_cross(ra, rb)));
                let nested = a.exterior.iter().any(|q| strictly_inside(q, b))
                    || b.exterior.iter().any(|q| strictly_inside(q, a));
                if crossing || nested {
                    return Err(IngestError::OverlappingPolygons { first: i, second: j });
                }
            }
        }
        Ok(FloodLayer { polygons, bboxes, version_tag: version_tag.into(), crs: None })
    }

    pub fn empty() -> FloodLayer {
        FloodLayer { polygons: Vec::new(), bboxes: Vec::new(), version_tag: "empty".into(), crs: None }
    }

    pub fn from_geojson_str(text: &str) -> Result<FloodLayer> {
        let fc = parse_collection(text)?;
        let mut polygons = Vec::new();
        for (fi, f) in fc.features.iter().enumerate() {
            let Some(g) = &f.geometry else { continue };
            match &g.value {
                Value::Polygon(rings) => polygons.push(polygon_from_rings(rings, fi)?),
                Value::MultiPolygon(polys) => {
                    for rings in polys {
                        polygons.push(polygon_from_rings(rings, fi)?);
                    }
                }
                other => {
                    return Err(IngestError::UnsupportedGeometry {
                        feature: fi,
                        kind: other.type_name().to_owned(),
                        context: "flood layer accepts Polygon and MultiPolygon",
                    })
                }
            }
        }
        let tag = fc
            .foreign_members
            .as_ref()
            .and_then(|m| m.get("version_tag"))
            .and_then(|v| v.as_str())
            .map(str::to_owned)
            .unwrap_or_else(|| content_tag(text.as_bytes()));
        let mut layer = FloodLayer::new(polygons, tag)?;
        layer.crs = declared_crs(&fc.foreign_members);
        Ok(layer)
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.polygons.iter().map(Polygon::area).sum()
    }

    /// Closed containment: a point on the flood boundary counts as flooded.
    pub fn contains(&self, p: &Point) -> bool {
        self.candidates_at(p).any(|poly| poly.contains(p))
    }

    fn candidates_at<'a>(&'a self, p: &'a Point) -> impl Iterator<Item = &'a Polygon> + 'a {
        self.polygons.iter().zip(&self.bboxes).filter(move |(_, b)| b.contains(p)).map(|(poly, _)| poly)
    }

    /// Flooded area inside a convex counter-clockwise polygon.
    pub fn area_within_convex(&self, convex: &[Point]) -> f64 {
        let Some(window) = Rect::of_points(convex) else { return 0.0 };
        self.polygons
            .iter()
            .zip(&self.bboxes)
            .filter(|(_, b)| b.intersects(&window))
            .map(|(poly, _)| poly.area_within_convex(convex))
            .sum()
    }

    /// Whether the closed polyline touches the flood extent anywhere.
    pub fn intersects_polyline(&self, line: &[Point]) -> bool {
        let Some(window) = Rect::of_points(line) else { return false };
        self.polygons.iter().zip(&self.bboxes).filter(|(_, b)| b.intersects(&window)).any(|(poly, _)| {
            if line.len() == 1 {
                return poly.contains(&line[0]);
            }
            line.windows(2).any(|w| poly.intersects_segment(&w[0], &w[1]))
        })
    }
}

fn content_tag(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

pub fn load_flood_layer(path: impl AsRef<Path>) -> Result<FloodLayer> {
    FloodLayer::from_geojson_str(&read(path.as_ref())?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: String,
    pub location: Point,
}

/// Point assets (buildings or care facilities), polygons reduced to centroids.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SiteSet {
    pub sites: Vec<Site>,
    pub crs: Option<String>,
}

pub type BuildingSet = SiteSet;
pub type FacilitySet = SiteSet;

impl SiteSet {
    pub fn from_points(points: impl IntoIterator<Item = (String, Point)>) -> Result<SiteSet> {
        let mut seen = HashSet::new();
        let mut sites = Vec::new();
        for (id, location) in points {
            if !seen.insert(id.clone()) {
                return Err(IngestError::DuplicateId(id));
            }
            sites.push(Site { id, location });
        }
        Ok(SiteSet { sites, crs: None })
    }

    pub fn from_geojson_str(text: &str) -> Result<SiteSet> {
        let fc = parse_collection(text)?;
        let mut explicit = HashSet::new();
        let mut points = Vec::with_capacity(fc.features.len());
        for (fi, f) in fc.features.iter().enumerate() {
            let Some(g) = &f.geometry else {
                return Err(IngestError::InvalidFeature { feature: fi, reason: "missing geometry".into() });
            };
            let location = match &g.value {
                Value::Point(p) => position(p, fi)?,
                Value::Polygon(rings) => polygon_centroid(&[polygon_from_rings(rings, fi)?]),
                Value::MultiPolygon(polys) => {
                    let parts = polys.iter().map(|r| polygon_from_rings(r, fi)).collect::<Result<Vec<_>>>()?;
                    polygon_centroid(&parts)
                }
                other => {
                    return Err(IngestError::UnsupportedGeometry {
                        feature: fi,
                        kind: other.type_name().to_owned(),
                        context: "sites accept Point, Polygon and MultiPolygon",
                    })
                }
            };
            let id = match feature_id(f) {
                Some(id) => {
                    if !explicit.insert(id.clone()) {
                        return Err(IngestError::DuplicateId(id));
                    }
                    id
                }
                None => format!("auto-{fi}"),
            };
            points.push((id, location));
        }
        let mut set = SiteSet::from_points(points)?;
        set.crs = declared_crs(&fc.foreign_members);
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

/// Area-weighted centroid of polygons with holes.
fn polygon_centroid(parts: &[Polygon]) -> Point {
    let (mut ax, mut ay, mut total) = (0.0, 0.0, 0.0);
    for poly in parts {
        for (k, ring) in poly.rings().enumerate() {
            let sign = if k == 0 { 1.0 } else { -1.0 };
            let a = geometry::signed_area(ring).abs() * sign;
            let c = geometry::ring_centroid(ring);
            ax += a * c.x;
            ay += a * c.y;
            total += a;
        }
    }
    if total.abs() < f64::EPSILON {
        return geometry::ring_centroid(&parts[0].exterior);
    }
    Point::new(ax / total, ay / total)
}

pub fn load_buildings(path: impl AsRef<Path>) -> Result<BuildingSet> {
    SiteSet::from_geojson_str(&read(path.as_ref())?)
}

pub fn load_facilities(path: impl AsRef<Path>) -> Result<FacilitySet> {
    SiteSet::from_geojson_str(&read(path.as_ref())?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadNode {
    pub id: i64,
    pub location: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadSegment {
    pub id: String,
    /// Index into [`RoadNetwork::nodes`].
    pub from: usize,
    pub to: usize,
    pub geometry: Vec<Point>,
}

/// Undirected road graph: crossings as nodes, segments as edges.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoadNetwork {
    nodes: Vec<RoadNode>,
    segments: Vec<RoadSegment>,
    index: HashMap<i64, usize>,
    pub crs: Option<String>,
}

impl RoadNetwork {
    /// Builds a validated network. Segments are `(id, from node id, to node id, polyline)`.
    pub fn new(nodes: Vec<RoadNode>, segments: Vec<(String, i64, i64, Vec<Point>)>) -> Result<RoadNetwork> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id, i).is_some() {
                return Err(IngestError::DuplicateId(n.id.to_string()));
            }
        }
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(segments.len());
        for (id, from_id, to_id, mut geometry) in segments {
            if !seen.insert(id.clone()) {
                return Err(IngestError::DuplicateId(id));
            }
            let lookup =
                |node: i64| index.get(&node).copied().ok_or(IngestError::DanglingSegment { segment: id.clone(), node });
            let from = lookup(from_id)?;
            let to = lookup(to_id)?;
            if geometry.is_empty() {
                geometry = vec![nodes[from].location, nodes[to].location];
            }
            let first = geometry[0];
            let last = geometry[geometry.len() - 1];
            if first.distance(&nodes[from].location) > ENDPOINT_TOLERANCE {
                return Err(IngestError::EndpointMismatch { segment: id, node: from_id });
            }
            if last.distance(&nodes[to].location) > ENDPOINT_TOLERANCE {
                return Err(IngestError::EndpointMismatch { segment: id, node: to_id });
            }
            out.push(RoadSegment { id, from, to, geometry });
        }
        Ok(RoadNetwork { nodes, segments: out, index, crs: None })
    }

    pub fn from_geojson_str(text: &str) -> Result<RoadNetwork> {
        let fc = parse_collection(text)?;
        let mut nodes = Vec::new();
        let mut segments = Vec::new();
        for (fi, f) in fc.features.iter().enumerate() {
            let Some(g) = &f.geometry else {
                return Err(IngestError::InvalidFeature { feature: fi, reason: "missing geometry".into() });
            };
            match &g.value {
                Value::Point(p) => {
                    let id = int_property(f, "node_id", fi)?.ok_or_else(|| IngestError::InvalidFeature {
                        feature: fi,
                        reason: "node point lacks integer `node_id`".into(),
                    })?;
                    nodes.push(RoadNode { id, location: position(p, fi)? });
                }
                Value::LineString(line) => {
                    let missing = |key: &str| IngestError::InvalidFeature {
                        feature: fi,
                        reason: format!("segment lacks integer `{key}`"),
                    };
                    let from = int_property(f, "node_from", fi)?.ok_or_else(|| missing("node_from"))?;
                    let to = int_property(f, "node_to", fi)?.ok_or_else(|| missing("node_to"))?;
                    if line.len() < 2 {
                        return Err(IngestError::InvalidFeature {
                            feature: fi,
                            reason: "segment needs two positions".into(),
                        });
                    }
                    let pts = line.iter().map(|p| position(p, fi)).collect::<Result<Vec<_>>>()?;
                    let id = feature_id(f).unwrap_or_else(|| format!("auto-{fi}"));
                    segments.push((id, from, to, pts));
                }
                other => {
                    return Err(IngestError::UnsupportedGeometry {
                        feature: fi,
                        kind: other.type_name().to_owned(),
                        context: "road network accepts Point nodes and LineString segments",
                    })
                }
            }
        }
        let mut net = RoadNetwork::new(nodes, segments)?;
        net.crs = declared_crs(&fc.foreign_members);
        Ok(net)
    }

    pub fn nodes(&self) -> &[RoadNode] {
        &self.nodes
    }

    pub fn segments(&self) -> &[RoadSegment] {
        &self.segments
    }

    pub fn node_index(&self, id: i64) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Number of segment ends incident to a node (a self-loop counts twice).
    pub fn degree(&self, id: i64) -> Option<usize> {
        let i = self.node_index(id)?;
        Some(self.segments.iter().map(|s| (s.from == i) as usize + (s.to == i) as usize).sum())
    }
}

pub fn load_road_network(path: impl AsRef<Path>) -> Result<RoadNetwork> {
    RoadNetwork::from_geojson_str(&read(path.as_ref())?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelledPoint {
    pub label: String,
    pub location: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Destination {
    pub label: String,
    pub location: Point,
    pub node_id: i64,
    /// Index into the network's node list.
    pub node: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DestinationSet {
    pub destinations: Vec<Destination>,
}

/// Snaps each evacuation destination to its nearest road node.
///
/// Ties go to the node listed first. The snapped node must be within
/// `max_snap` metres and outside the flood extent.
pub fn snap_destinations(
    net: &RoadNetwork,
    flood: &FloodLayer,
    points: &[LabelledPoint],
    max_snap: f64,
) -> Result<DestinationSet> {
    if points.is_empty() {
        return Err(IngestError::NoDestinations);
    }
    let mut destinations = Vec::with_capacity(points.len());
    for lp in points {
        let nearest = net.nodes.iter().enumerate().map(|(i, n)| (i, n.location.distance(&lp.location))).fold(
            None,
            |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((i, d)),
            },
        );
        let node = match nearest {
            Some((node, dist)) if dist <= max_snap => node,
            _ => return Err(IngestError::NoNodeWithinSnap { label: lp.label.clone(), max_snap }),
        };
        let road_node = &net.nodes[node];
        if flood.contains(&road_node.location) {
            return Err(IngestError::FloodedDestination { label: lp.label.clone(), node: road_node.id });
        }
        destinations.push(Destination { label: lp.label.clone(), location: lp.location, node_id: road_node.id, node });
    }
    Ok(DestinationSet { destinations })
}

//! Criticality scores and priority categories from risk posteriors.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::bayesnet::risk::RiskPosterior;
use crate::evidence::ring_coordinates;
use crate::hexgrid::{HexGrid, TileId};

/// Scores at or below this are Safe.
pub const SAFE_EPS: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 1000;
pub const DEFAULT_K: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum PrioritizerError {
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("cluster count {0} outside 1..=3")]
    InvalidClusterCount(usize),
    #[error("no posterior for tile {0}")]
    MissingPosterior(TileId),
    #[error("posterior for tile {0} which is not in the grid")]
    UnknownTile(TileId),
}

/// Weights of the four risk states, in (None, Low, Medium, High) order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub none: f64,
    pub low: f64,
    pub medium: f64,
    pub high: f64,
}

impl Default for WeightVector {
    fn default() -> Self {
        WeightVector { none: 0.0, low: 0.33, medium: 0.66, high: 1.0 }
    }
}

impl WeightVector {
    pub fn new(none: f64, low: f64, medium: f64, high: f64) -> Result<Self, PrioritizerError> {
        let w = WeightVector { none, low, medium, high };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), PrioritizerError> {
        let a = self.as_array();
        if a.iter().any(|v| !v.is_finite()) {
            return Err(PrioritizerError::InvalidWeights(format!("{a:?} contains a non-finite value")));
        }
        if a.windows(2).any(|p| p[0] > p[1]) {
            return Err(PrioritizerError::InvalidWeights(format!(
                "{a:?} is not ordered none <= low <= medium <= high"
            )));
        }
        if a[0] >= a[3] {
            return Err(PrioritizerError::InvalidWeights(format!("{a:?} gives every state the same weight")));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.none, self.low, self.medium, self.high]
    }

    pub fn scaled(&self, c: f64) -> WeightVector {
        WeightVector { none: self.none * c, low: self.low * c, medium: self.medium * c, high: self.high * c }
    }
}

impl FromStr for WeightVector {
    type Err = PrioritizerError;

    /// Parses `none,low,medium,high`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| PrioritizerError::InvalidWeights(format!("`{s}`: {e}")))?;
        match parts[..] {
            [n, l, m, h] => WeightVector::new(n, l, m, h),
            _ => Err(PrioritizerError::InvalidWeights(format!("`{s}` needs four comma-separated values"))),
        }
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.none, self.low, self.medium, self.high)
    }
}

/// Probability distribution criticality: the weighted sum of the posterior.
pub fn pdc(post: &RiskPosterior, w: &WeightVector) -> f64 {
    let p = post.0;
    w.none * p[0] + w.low * p[1] + w.medium * p[2] + w.high * p[3]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PriorityCategory {
    Safe,
    Exposed,
    Priority,
    HighPriority,
}

impl PriorityCategory {
    /// Most critical first.
    pub const RANKED: [PriorityCategory; 3] =
        [PriorityCategory::HighPriority, PriorityCategory::Priority, PriorityCategory::Exposed];

    pub fn label(self) -> &'static str {
        match self {
            PriorityCategory::Safe => "Safe",
            PriorityCategory::Exposed => "Exposed",
            PriorityCategory::Priority => "Priority",
            PriorityCategory::HighPriority => "HighPriority",
        }
    }
}

impl fmt::Display for PriorityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMethod {
    /// No score above the Safe threshold.
    AllSafe,
    /// Lloyd iterations from quantile starting centroids.
    Lloyd,
    /// Fewer distinct scores than clusters: categories assigned by rank.
    Rank,
}

/// How the non-safe scores were split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterMetadata {
    pub method: ClusterMethod,
    pub k: usize,
    /// Centroids of the non-empty clusters, most critical first.
    pub centroids: Vec<f64>,
    pub initial_centroids: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub safe_eps: f64,
    pub init: String,
    pub tie_break: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Categorization {
    pub categories: Vec<PriorityCategory>,
    pub metadata: ClusterMetadata,
}

/// Nearest-rank quantile of an ascending slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64 - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

fn initial_centroids(sorted: &[f64], distinct: &[f64], k: usize) -> Vec<f64> {
    let at = |v: &[f64]| -> Vec<f64> { (0..k).map(|j| quantile(v, (2 * j + 1) as f64 / (2 * k) as f64)).collect() };
    let c = at(sorted);
    if c.windows(2).all(|p| p[0] < p[1]) {
        c
    } else {
        at(distinct)
    }
}

/// Nearest centroid, ties to the larger one. Centroids are ascending.
fn nearest(centroids: &[f64], v: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = (v - c).abs();
        if d <= best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// Splits scores into Safe plus up to `k` clusters named by centroid rank.
pub fn categorize(pdcs: &[f64], k: usize) -> Result<Categorization, PrioritizerError> {
    if !(1..=3).contains(&k) {
        return Err(PrioritizerError::InvalidClusterCount(k));
    }
    let mut metadata = ClusterMetadata {
        method: ClusterMethod::AllSafe,
        k,
        centroids: Vec::new(),
        initial_centroids: Vec::new(),
        iterations: 0,
        converged: true,
        safe_eps: SAFE_EPS,
        init: "nearest-rank quantiles (2j+1)/(2k) of sorted non-safe scores".into(),
        tie_break: "equidistant scores join the more critical cluster".into(),
    };
    let mut categories = vec![PriorityCategory::Safe; pdcs.len()];
    let active: Vec<usize> = (0..pdcs.len()).filter(|&i| pdcs[i] > SAFE_EPS).collect();
    if active.is_empty() {
        return Ok(Categorization { categories, metadata });
    }
    let mut sorted: Vec<f64> = active.iter().map(|&i| pdcs[i]).collect();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();

    if distinct.len() < k {
        metadata.method = ClusterMethod::Rank;
        for &i in &active {
            let rank_from_top = distinct.len() - 1 - distinct.partition_point(|v| *v < pdcs[i]);
            categories[i] = PriorityCategory::RANKED[rank_from_top.min(k - 1)];
        }
        metadata.centroids = distinct.iter().rev().copied().collect();
        metadata.initial_centroids = metadata.centroids.clone();
        return Ok(Categorization { categories, metadata });
    }

    metadata.method = ClusterMethod::Lloyd;
    let mut centroids = initial_centroids(&sorted, &distinct, k);
    metadata.initial_centroids = centroids.iter().rev().copied().collect();
    let mut assignment: Vec<usize> = sorted.iter().map(|&v| nearest(&centroids, v)).collect();
    metadata.converged = false;
    for it in 1..=MAX_ITERATIONS {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (v, &a) in sorted.iter().zip(&assignment) {
            sums[a] += v;
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j] / counts[j] as f64;
            }
        }
        let next: Vec<usize> = sorted.iter().map(|&v| nearest(&centroids, v)).collect();
        metadata.iterations = it;
        if next == assignment {
            metadata.converged = true;
            break;
        }
        assignment = next;
    }

    // rank non-empty clusters by centroid, most critical first
    let mut used: Vec<usize> = (0..k).filter(|j| assignment.contains(j)).collect();
    used.sort_by(|a, b| centroids[*b].total_cmp(&centroids[*a]));
    metadata.centroids = used.iter().map(|&j| centroids[j]).collect();
    let mut category_of = vec![PriorityCategory::Exposed; k];
    for (rank, &j) in used.iter().enumerate() {
        category_of[j] = PriorityCategory::RANKED[rank];
    }
    for &i in &active {
        categories[i] = category_of[nearest(&centroids, pdcs[i])];
    }
    Ok(Categorization { categories, metadata })
}

/// True when, sorted by score, categories form contiguous bands with the most
/// critical on top and Safe exactly at scores `<= SAFE_EPS`.
pub fn is_contiguous(pdcs: &[f64], categories: &[PriorityCategory]) -> bool {
    let mut pairs: Vec<(f64, PriorityCategory)> = pdcs.iter().copied().zip(categories.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    pairs.windows(2).all(|w| w[0].1 <= w[1].1 && (w[0].0 < w[1].0 || w[0].1 == w[1].1))
        && pairs.iter().all(|(v, c)| (*c == PriorityCategory::Safe) == (*v <= SAFE_EPS))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub high_priority: usize,
    pub priority: usize,
    pub exposed: usize,
    pub safe: usize,
}

impl CategoryCounts {
    pub fn tally(categories: &[PriorityCategory]) -> Self {
        let mut c = CategoryCounts::default();
        for cat in categories {
            match cat {
                PriorityCategory::HighPriority => c.high_priority += 1,
                PriorityCategory::Priority => c.priority += 1,
                PriorityCategory::Exposed => c.exposed += 1,
                PriorityCategory::Safe => c.safe += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.high_priority + self.priority + self.exposed + self.safe
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TilePriority {
    pub tile_id: TileId,
    pub posterior: RiskPosterior,
    pub pdc: f64,
    pub category: PriorityCategory,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PriorityMap {
    pub tiles: Vec<TilePriority>,
    pub weights: WeightVector,
    pub counts: CategoryCounts,
    pub clustering: ClusterMetadata,
}

/// Scores and categorises every grid tile. Tiles come out in grid order.
pub fn build_priority_map(
    grid: &HexGrid,
    posteriors: &BTreeMap<TileId, RiskPosterior>,
    w: &WeightVector,
    k: usize,
) -> Result<PriorityMap, PrioritizerError> {
    w.validate()?;
    if let Some(id) = posteriors.keys().find(|id| id.index() >= grid.len()) {
        return Err(PrioritizerError::UnknownTile(*id));
    }
    let ordered = grid
        .tiles()
        .iter()
        .map(|t| posteriors.get(&t.id).copied().ok_or(PrioritizerError::MissingPosterior(t.id)).map(|p| (t.id, p)))
        .collect::<Result<Vec<_>, _>>()?;
    prioritize(ordered, w, k)
}

/// Scores and categorises `(tile, posterior)` pairs in the given order.
pub fn prioritize(
    posteriors: Vec<(TileId, RiskPosterior)>,
    w: &WeightVector,
    k: usize,
) -> Result<PriorityMap, PrioritizerError> {
    w.validate()?;
    let scores: Vec<f64> = posteriors.iter().map(|(_, p)| pdc(p, w)).collect();
    let cat = categorize(&scores, k)?;
    let tiles: Vec<TilePriority> = posteriors
        .into_iter()
        .zip(scores)
        .zip(&cat.categories)
        .map(|(((tile_id, posterior), pdc), &category)| TilePriority { tile_id, posterior, pdc, category })
        .collect();
    Ok(PriorityMap { counts: CategoryCounts::tally(&cat.categories), tiles, weights: *w, clustering: cat.metadata })
}

/// The priority map as a GeoJSON feature collection. `extra` entries are
/// added as top-level members.
pub fn priomap_geojson(
    grid: &HexGrid,
    map: &PriorityMap,
    extra: serde_json::Map<String, serde_json::Value>,
) -> serde_json::Value {
    let features: Vec<_> = map
        .tiles
        .iter()
        .map(|t| {
            let tile = &grid.tiles()[t.tile_id.index()];
            json!({
                "type": "Feature",
                "id": t.tile_id.0,
                "geometry": {"type": "Polygon", "coordinates": [ring_coordinates(&tile.polygon)]},
                "properties": {
                    "tile_id": t.tile_id.0,
                    "q": tile.axial.q,
                    "r": tile.axial.r,
                    "category": t.category.label(),
                    "pdc": t.pdc,
                    "p_none": t.posterior.none(),
                    "p_low": t.posterior.low(),
                    "p_medium": t.posterior.medium(),
                    "p_high": t.posterior.high(),
                }
            })
        })
        .collect();
    let mut doc = json!({
        "type": "FeatureCollection",
        "weights": map.weights,
        "centroids": map.clustering.centroids,
        "clustering": map.clustering,
        "counts": map.counts,
        "features": features,
    });
    let obj = doc.as_object_mut().unwrap();
    for (key, value) in extra {
        obj.insert(key, value);
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use PriorityCategory::*;

    fn post(p: [f64; 4]) -> RiskPosterior {
        RiskPosterior(p)
    }

    #[test]
    fn pdc_examples() {
        let w = WeightVector::default();
        assert_eq!(pdc(&post([0.0, 0.0, 0.0, 1.0]), &w), 1.0);
        assert_eq!(pdc(&post([1.0, 0.0, 0.0, 0.0]), &w), 0.0);
        assert_eq!(pdc(&post([0.0, 0.0, 1.0, 0.0]), &w), 0.66);
        assert!((pdc(&post([0.2, 0.2, 0.3, 0.3]), &w) - 0.564).abs() < 1e-12);
    }

    #[test]
    fn weights_parse_and_validate() {
        assert_eq!("0, 0.33,0.66,1".parse::<WeightVector>().unwrap(), WeightVector::default());
        assert!("0,0.5,0.4,1".parse::<WeightVector>().is_err());
        assert!("0,0.5,1".parse::<WeightVector>().is_err());
        assert!("0,x,0.5,1".parse::<WeightVector>().is_err());
        assert!("0.5,0.5,0.5,0.5".parse::<WeightVector>().is_err());
        assert_eq!(WeightVector::default().to_string().parse::<WeightVector>().unwrap(), WeightVector::default());
    }

    #[test]
    fn all_zero_is_safe() {
        let c = categorize(&[0.0, 0.0, 1e-13], 3).unwrap();
        assert_eq!(c.categories, vec![Safe; 3]);
        assert_eq!(c.metadata.method, ClusterMethod::AllSafe);
    }

    #[test]
    fn three_clear_groups() {
        let v = [0.0, 0.10, 0.12, 0.50, 0.52, 0.90, 0.95];
        let c = categorize(&v, 3).unwrap();
        assert_eq!(c.categories, vec![Safe, Exposed, Exposed, Priority, Priority, HighPriority, HighPriority]);
        assert!((c.metadata.centroids[0] - 0.925).abs() < 1e-12);
        assert!(is_contiguous(&v, &c.categories));
    }

    #[test]
    fn degenerate_rank_rule() {
        let c = categorize(&[0.0, 0.4], 3).unwrap();
        assert_eq!(c.categories, vec![Safe, HighPriority]);
        assert_eq!(c.metadata.method, ClusterMethod::Rank);
        let c = categorize(&[0.2, 0.4, 0.2], 3).unwrap();
        assert_eq!(c.categories, vec![Priority, HighPriority, Priority]);
        let c = categorize(&[0.2, 0.4, 0.6], 2).unwrap();
        assert_eq!(c.metadata.method, ClusterMethod::Lloyd);
        assert_eq!(c.categories[2], HighPriority);
        let c = categorize(&[0.2, 0.4], 1).unwrap();
        assert_eq!(c.categories, vec![HighPriority, HighPriority]);
        assert!(categorize(&[0.2], 4).is_err());
        assert!(categorize(&[0.2], 0).is_err());
    }

    #[test]
    fn equidistant_value_joins_higher_cluster() {
        // starting centroids 0.25, 0.75, 1.0 leave 0.5 exactly between the lower two
        let v = [0.25, 0.25, 0.25, 0.5, 0.75, 0.75, 0.75, 0.75, 1.0, 1.0, 1.0];
        let c = categorize(&v, 3).unwrap();
        assert!(c.metadata.converged);
        assert!(is_contiguous(&v, &c.categories));
        assert_eq!(c.metadata.initial_centroids, vec![1.0, 0.75, 0.25]);
        assert_eq!(c.categories[3], Priority, "{:?}", c.metadata);
    }

    #[test]
    fn contiguity_detects_interleaving() {
        assert!(!is_contiguous(&[0.2, 0.3], &[Priority, Exposed]));
        assert!(!is_contiguous(&[0.2, 0.2], &[Priority, Exposed]));
        assert!(!is_contiguous(&[0.0], &[Exposed]));
        assert!(is_contiguous(&[0.0, 0.2, 0.3], &[Safe, Exposed, HighPriority]));
    }

    #[test]
    fn map_requires_every_tile() {
        let grid = HexGrid::build(crate::geometry::Rect::new(0.0, 0.0, 1000.0, 1000.0), 420.0).unwrap();
        let mut posts: BTreeMap<TileId, RiskPosterior> =
            grid.tiles().iter().map(|t| (t.id, post([1.0, 0.0, 0.0, 0.0]))).collect();
        let map = build_priority_map(&grid, &posts, &WeightVector::default(), 3).unwrap();
        assert_eq!(map.counts.safe, grid.len());
        assert_eq!(map.counts.total(), grid.len());

        posts.insert(TileId(1), post([0.0, 0.0, 0.0, 1.0]));
        posts.insert(TileId(2), post([0.0, 0.5, 0.5, 0.0]));
        let map = build_priority_map(&grid, &posts, &WeightVector::default(), 3).unwrap();
        assert_eq!(map.tiles[1].category, HighPriority);
        let doc = priomap_geojson(&grid, &map, serde_json::Map::new());
        assert_eq!(doc["features"].as_array().unwrap().len(), grid.len());
        assert_eq!(doc["features"][1]["properties"]["category"], "HighPriority");
        assert_eq!(doc["weights"]["low"], 0.33);

        posts.remove(&TileId(3));
        assert_eq!(
            build_priority_map(&grid, &posts, &WeightVector::default(), 3).unwrap_err(),
            PrioritizerError::MissingPosterior(TileId(3))
        );
        posts.insert(TileId(3), post([1.0, 0.0, 0.0, 0.0]));
        posts.insert(TileId(9999), post([1.0, 0.0, 0.0, 0.0]));
        assert_eq!(
            build_priority_map(&grid, &posts, &WeightVector::default(), 3).unwrap_err(),
            PrioritizerError::UnknownTile(TileId(9999))
        );
    }
}

//! Scenario configuration, read from TOML.

use std::path::{Path, PathBuf};

use floodprio_core::evidence::PercentileLevels;
use floodprio_core::geo_ingest::LabelledPoint;
use floodprio_core::geometry::{Point, Rect};
use floodprio_core::prioritizer::{WeightVector, DEFAULT_K};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputPaths {
    pub flood: PathBuf,
    pub buildings: PathBuf,
    pub facilities: PathBuf,
    pub roads: PathBuf,
    /// Risk table configuration; the built-in generator defaults when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpt_config: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DestinationConfig {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

fn default_k() -> usize {
    DEFAULT_K
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Projected CRS label shared by every input layer, e.g. `EPSG:25832`.
    pub crs: String,
    /// `[min_x, min_y, max_x, max_y]` in metres.
    pub bbox: [f64; 4],
    /// Corner-to-corner hexagon width in metres.
    pub max_width: f64,
    /// Largest allowed distance between a destination and its road node.
    pub max_snap: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    pub inputs: InputPaths,
    pub destinations: Vec<DestinationConfig>,
    #[serde(default)]
    pub weights: WeightVector,
    #[serde(default)]
    pub percentiles: PercentileLevels,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<ScenarioConfig, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::validation("config", e.to_string()))
    }

    /// Reads a config file; relative input paths resolve against its directory.
    pub fn load(path: &Path) -> Result<ScenarioConfig, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::not_found(format!("config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serialises")
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.inputs.flood);
        fix(&mut self.inputs.buildings);
        fix(&mut self.inputs.facilities);
        fix(&mut self.inputs.roads);
        if let Some(p) = &mut self.inputs.cpt_config {
            fix(p);
        }
    }

    pub fn bbox_rect(&self) -> Rect {
        let [a, b, c, d] = self.bbox;
        Rect::new(a, b, c, d)
    }

    pub fn destination_points(&self) -> Vec<LabelledPoint> {
        self.destinations
            .iter()
            .map(|d| LabelledPoint { label: d.label.clone(), location: Point::new(d.x, d.y) })
            .collect()
    }

    /// Checks values and that every referenced file exists.
    pub fn validate(&self) -> Result<(), ServiceError> {
        let invalid = |msg: String| Err(ServiceError::validation("config", msg));
        if self.crs.trim().is_empty() {
            return invalid("crs is empty".into());
        }
        let [a, b, c, d] = self.bbox;
        if !self.bbox.iter().all(|v| v.is_finite()) || a >= c || b >= d {
            return invalid(format!("bbox {:?} is not [min_x, min_y, max_x, max_y] with positive extent", self.bbox));
        }
        if !(self.max_width.is_finite() && self.max_width > 0.0) {
            return invalid(format!("max_width {} must be positive", self.max_width));
        }
        if !(self.max_snap.is_finite() && self.max_snap >= 0.0) {
            return invalid(format!("max_snap {} must be non-negative", self.max_snap));
        }
        if !(1..=3).contains(&self.k) {
            return invalid(format!("k {} outside 1..=3", self.k));
        }
        if self.destinations.is_empty() {
            return invalid("at least one destination is required".into());
        }
        self.weights.validate().map_err(|e| ServiceError::validation("config", e.to_string()))?;
        PercentileLevels::new(self.percentiles.medium, self.percentiles.high)
            .map_err(|e| ServiceError::validation("config", e.to_string()))?;
        let inputs = &self.inputs;
        for p in
            [&inputs.flood, &inputs.buildings, &inputs.facilities, &inputs.roads].into_iter().chain(&inputs.cpt_config)
        {
            if !p.is_file() {
                return Err(ServiceError::not_found(format!("input file {}", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
crs = "EPSG:25832"
bbox = [0.0, 0.0, 3000.0, 2600.0]
max_width = 420.0
max_snap = 150.0

[inputs]
flood = "flood.geojson"
buildings = "buildings.geojson"
facilities = "facilities.geojson"
roads = "roads.geojson"

[[destinations]]
label = "north"
x = 100.0
y = 2500.0
"#;

    #[test]
    fn defaults_and_relative_paths() {
        let mut cfg = ScenarioConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.k, 3);
        assert_eq!(cfg.weights, WeightVector::default());
        assert_eq!(cfg.percentiles, PercentileLevels::default());
        cfg.resolve_paths(Path::new("/data/city"));
        assert_eq!(cfg.inputs.roads, PathBuf::from("/data/city/roads.geojson"));
        let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation_rejects_bad_values() {
        let base = ScenarioConfig::from_toml_str(SAMPLE).unwrap();
        let mut cfg = base.clone();
        cfg.bbox = [0.0, 0.0, -1.0, 5.0];
        assert!(matches!(cfg.validate(), Err(ServiceError::Validation { .. })));
        let mut cfg = base.clone();
        cfg.percentiles = PercentileLevels { medium: 0.9, high: 0.75 };
        assert!(matches!(cfg.validate(), Err(ServiceError::Validation { .. })));
        let mut cfg = base.clone();
        cfg.k = 4;
        assert!(matches!(cfg.validate(), Err(ServiceError::Validation { .. })));
        // files do not exist
        assert!(matches!(base.validate(), Err(ServiceError::NotFound(_))));
        assert!(ScenarioConfig::from_toml_str("crs = 1").is_err());
    }
}

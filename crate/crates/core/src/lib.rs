pub mod bayesnet;
pub mod evidence;
pub mod geo_ingest;
pub mod geometry;
pub mod hexgrid;
pub mod prioritizer;

//! Pointy-top hexagonal partition of a rectangular study region.
//!
//! Tiles are addressed by axial coordinates `(q, r)`. The centre of axial
//! `(0, 0)` sits on the lower-left corner of the bounding box, `q` grows
//! along +x and `r` along +y (rows are offset by half a tile width).
//! Tiles overhang the bounding box edge; they are never clipped, so every
//! tile is congruent.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Point, Rect};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Upper bound on grid size, to fail fast on unit mistakes (km vs m).
pub const MAX_TILES: usize = 5_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("invalid grid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("unknown tile id {0}")]
    UnknownTile(TileId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TileId(pub u32);

impl TileId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Axial hex coordinate. Ordering is lexicographic on `(q, r)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Axial {
    pub q: i32,
    pub r: i32,
}

impl Axial {
    pub const fn new(q: i32, r: i32) -> Self {
        Axial { q, r }
    }

    /// The six axial directions, counter-clockwise starting east.
    pub const DIRECTIONS: [Axial; 6] = [
        Axial::new(1, 0),
        Axial::new(1, -1),
        Axial::new(0, -1),
        Axial::new(-1, 0),
        Axial::new(-1, 1),
        Axial::new(0, 1),
    ];

    pub fn neighbor(self, dir: usize) -> Axial {
        let d = Self::DIRECTIONS[dir % 6];
        Axial::new(self.q + d.q, self.r + d.r)
    }

    /// Rounds fractional axial coordinates to the containing hex.
    pub fn round(q: f64, r: f64) -> Axial {
        let s = -q - r;
        let (mut rq, mut rr, rs) = (q.round(), r.round(), s.round());
        let (dq, dr, ds) = ((rq - q).abs(), (rr - r).abs(), (rs - s).abs());
        if dq > dr && dq > ds {
            rq = -rr - rs;
        } else if dr > ds {
            rr = -rq - rs;
        }
        Axial::new(rq as i32, rr as i32)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub id: TileId,
    pub axial: Axial,
    /// Counter-clockwise, six vertices.
    pub polygon: Vec<Point>,
    pub centroid: Point,
}

impl Tile {
    pub fn area(&self) -> f64 {
        geometry::signed_area(&self.polygon)
    }
}

#[derive(Clone, Debug)]
pub struct HexGrid {
    origin: Point,
    max_width: f64,
    bbox: Rect,
    tiles: Vec<Tile>,
    index: HashMap<Axial, TileId>,
}

/// Area of a regular hexagon with the given corner-to-corner width.
pub fn hexagon_area(max_width: f64) -> f64 {
    3.0 * SQRT3 / 8.0 * max_width * max_width
}

impl HexGrid {
    /// Covers `bbox` with congruent hexagons of corner-to-corner width `max_width`.
    ///
    /// Every hexagon that overlaps the box with positive area is kept, so the
    /// union of tiles covers the box. Tiles are ordered row-major: by `r`,
    /// then by `q`.
    pub fn build(bbox: Rect, max_width: f64) -> Result<HexGrid, GridError> {
        if !(max_width.is_finite() && max_width > 0.0) {
            return Err(GridError::InvalidParameter {
                name: "max_width",
                reason: format!("must be a positive finite length, got {max_width}"),
            });
        }
        let finite = [bbox.min_x, bbox.min_y, bbox.max_x, bbox.max_y].iter().all(|v| v.is_finite());
        if !finite || !(bbox.width() > 0.0 && bbox.height() > 0.0) {
            return Err(GridError::InvalidParameter {
                name: "bbox",
                reason: format!("must have positive width and height, got {} x {}", bbox.width(), bbox.height()),
            });
        }
        let radius = max_width / 2.0;
        let est = (bbox.width() / (SQRT3 * radius) + 3.0) * (bbox.height() / (1.5 * radius) + 3.0);
        if est > MAX_TILES as f64 {
            return Err(GridError::InvalidParameter {
                name: "max_width",
                reason: format!("would produce about {est:.0} tiles (limit {MAX_TILES})"),
            });
        }

        let origin = Point::new(bbox.min_x, bbox.min_y);
        let mut grid = HexGrid { origin, max_width, bbox, tiles: Vec::new(), index: HashMap::new() };
        let min_overlap = hexagon_area(max_width) * 1e-9;
        let clip = bbox.to_ring();

        let r_lo = (-radius / (1.5 * radius)).floor() as i32 - 1;
        let r_hi = ((bbox.height() + radius) / (1.5 * radius)).ceil() as i32 + 1;
        for r in r_lo..=r_hi {
            let half = r as f64 / 2.0;
            let q_lo = (-1.0 - half).floor() as i32 - 1;
            let q_hi = (bbox.width() / (SQRT3 * radius) + 1.0 - half).ceil() as i32 + 1;
            for q in q_lo..=q_hi {
                let axial = Axial::new(q, r);
                let polygon = grid.hexagon_at(axial);
                let poly_box = Rect::of_points(&polygon).expect("hexagon has vertices");
                if !poly_box.intersects(&bbox) {
                    continue;
                }
                if geometry::clipped_area(&polygon, &clip) <= min_overlap {
                    continue;
                }
                let id = TileId(grid.tiles.len() as u32);
                let centroid = grid.center_of(axial);
                grid.index.insert(axial, id);
                grid.tiles.push(Tile { id, axial, polygon, centroid });
            }
        }
        Ok(grid)
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn max_width(&self) -> f64 {
        self.max_width
    }

    pub fn circumradius(&self) -> f64 {
        self.max_width / 2.0
    }

    pub fn bbox(&self) -> Rect {
        self.bbox
    }

    pub fn tile_area(&self) -> f64 {
        hexagon_area(self.max_width)
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn tile(&self, id: TileId) -> Result<&Tile, GridError> {
        self.tiles.get(id.index()).ok_or(GridError::UnknownTile(id))
    }

    pub fn id_of(&self, axial: Axial) -> Option<TileId> {
        self.index.get(&axial).copied()
    }

    /// Centre of an axial cell whether or not it belongs to the grid.
    pub fn center_of(&self, axial: Axial) -> Point {
        let radius = self.circumradius();
        Point::new(
            self.origin.x + radius * SQRT3 * (axial.q as f64 + axial.r as f64 / 2.0),
            self.origin.y + radius * 1.5 * axial.r as f64,
        )
    }

    /// Counter-clockwise hexagon of an axial cell, first vertex at -30 degrees.
    pub fn hexagon_at(&self, axial: Axial) -> Vec<Point> {
        let c = self.center_of(axial);
        let radius = self.circumradius();
        (0..6)
            .map(|i| {
                let angle = (60.0 * i as f64 - 30.0).to_radians();
                Point::new(c.x + radius * angle.cos(), c.y + radius * angle.sin())
            })
            .collect()
    }

    /// Axial neighbours of a tile that are part of the grid, in direction order.
    pub fn neighbors(&self, id: TileId) -> Result<Vec<TileId>, GridError> {
        let axial = self.tile(id)?.axial;
        Ok((0..6).filter_map(|d| self.id_of(axial.neighbor(d))).collect())
    }

    pub fn tile_polygon(&self, id: TileId) -> Result<&[Point], GridError> {
        Ok(&self.tile(id)?.polygon)
    }

    /// Tile whose closed hexagon contains `p`.
    ///
    /// Points on a shared edge or vertex go to the tile with the
    /// lexicographically smallest axial coordinate.
    pub fn locate(&self, p: &Point) -> Option<TileId> {
        let radius = self.circumradius();
        let dx = p.x - self.origin.x;
        let dy = p.y - self.origin.y;
        let fq = (SQRT3 / 3.0 * dx - dy / 3.0) / radius;
        let fr = (2.0 / 3.0 * dy) / radius;
        let base = Axial::round(fq, fr);
        let tol = radius * 1e-9;
        std::iter::once(base)
            .chain((0..6).map(|d| base.neighbor(d)))
            .filter_map(|a| self.id_of(a).map(|id| (a, id)))
            .filter(|(_, id)| geometry::convex_contains(&self.tiles[id.index()].polygon, p, tol))
            .min_by_key(|(a, _)| *a)
            .map(|(_, id)| id)
    }
}

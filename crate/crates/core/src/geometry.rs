//! Planar geometry primitives in a projected metric coordinate system.
//!
//! Rings are stored open (the closing vertex is not repeated). Containment
//! tests treat polygons as closed sets: a point on the boundary is inside.

use serde::{Deserialize, Serialize};

/// Absolute tolerance (metres) used for on-boundary decisions.
pub const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn sub(&self, other: &Point) -> (f64, f64) {
        (self.x - other.x, self.y - other.y)
    }
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Rect { min_x, min_y, max_x, max_y }
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    /// Bounding box of a point set. Returns `None` for an empty set.
    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Rect> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut r = Rect::new(first.x, first.y, first.x, first.y);
        for p in it {
            r.min_x = r.min_x.min(p.x);
            r.min_y = r.min_y.min(p.y);
            r.max_x = r.max_x.max(p.x);
            r.max_y = r.max_y.max(p.y);
        }
        Some(r)
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.min_x <= other.max_x && other.min_x <= self.max_x && self.min_y <= other.max_y && other.min_y <= self.max_y
    }

    /// Counter-clockwise corner ring.
    pub fn to_ring(&self) -> Vec<Point> {
        vec![
            Point::new(self.min_x, self.min_y),
            Point::new(self.max_x, self.min_y),
            Point::new(self.max_x, self.max_y),
            Point::new(self.min_x, self.max_y),
        ]
    }
}

/// Twice the signed area of triangle (a, b, c); positive when counter-clockwise.
pub fn cross(a: &Point, b: &Point, c: &Point) -> f64 {
    let (abx, aby) = b.sub(a);
    let (acx, acy) = c.sub(a);
    abx * acy - aby * acx
}

/// Shoelace signed area of an open ring; positive for counter-clockwise order.
pub fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = &ring[i];
        let b = &ring[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    acc * 0.5
}

/// Area-weighted centroid of a ring. Falls back to the vertex mean for
/// degenerate (zero-area) rings.
pub fn ring_centroid(ring: &[Point]) -> Point {
    let n = ring.len();
    let area = signed_area(ring);
    if n < 3 || area.abs() < f64::EPSILON {
        let (sx, sy) = ring.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        let k = n.max(1) as f64;
        return Point::new(sx / k, sy / k);
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let a = &ring[i];
        let b = &ring[(i + 1) % n];
        let f = a.x * b.y - b.x * a.y;
        cx += (a.x + b.x) * f;
        cy += (a.y + b.y) * f;
    }
    Point::new(cx / (6.0 * area), cy / (6.0 * area))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Boundary,
    Outside,
}

/// Distance from `p` to the closed segment `a`-`b`.
pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let (dx, dy) = b.sub(a);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(&Point::new(a.x + t * dx, a.y + t * dy))
}

/// Crossing-number point-in-ring test with explicit boundary detection.
pub fn locate_in_ring(p: &Point, ring: &[Point]) -> Containment {
    let n = ring.len();
    if n < 3 {
        return Containment::Outside;
    }
    let mut inside = false;
    for i in 0..n {
        let a = &ring[i];
        let b = &ring[(i + 1) % n];
        if point_segment_distance(p, a, b) <= BOUNDARY_EPS {
            return Containment::Boundary;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_at {
                inside = !inside;
            }
        }
    }
    if inside {
        Containment::Inside
    } else {
        Containment::Outside
    }
}

/// Closed point-in-convex-polygon test for a counter-clockwise ring.
pub fn convex_contains(ring: &[Point], p: &Point, tol: f64) -> bool {
    let n = ring.len();
    (0..n).all(|i| {
        let a = &ring[i];
        let b = &ring[(i + 1) % n];
        let len = a.distance(b);
        cross(a, b, p) >= -tol * len
    })
}

fn orientation_sign(a: &Point, b: &Point, c: &Point) -> i8 {
    let v = cross(a, b, c);
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn on_collinear_segment(a: &Point, b: &Point, p: &Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed segment intersection test (touching endpoints count).
pub fn segments_intersect(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let o1 = orientation_sign(a, b, c);
    let o2 = orientation_sign(a, b, d);
    let o3 = orientation_sign(c, d, a);
    let o4 = orientation_sign(c, d, b);
    if o1 != o2 && o3 != o4 {
        return true;
    }
    (o1 == 0 && on_collinear_segment(a, b, c))
        || (o2 == 0 && on_collinear_segment(a, b, d))
        || (o3 == 0 && on_collinear_segment(c, d, a))
        || (o4 == 0 && on_collinear_segment(c, d, b))
}

/// Proper crossing: the open segments cross at a single interior point.
pub fn segments_cross(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let o1 = orientation_sign(a, b, c);
    let o2 = orientation_sign(a, b, d);
    let o3 = orientation_sign(c, d, a);
    let o4 = orientation_sign(c, d, b);
    o1 * o2 < 0 && o3 * o4 < 0
}

/// Returns the first pair of non-adjacent edges that intersect, if any.
///
/// Adjacent edges may only share their common vertex; collinear overlap of
/// adjacent edges (a spike) is also reported.
pub fn first_self_intersection(ring: &[Point]) -> Option<(usize, usize)> {
    let n = ring.len();
    if n < 3 {
        return Some((0, 0));
    }
    let edge = |i: usize| (&ring[i], &ring[(i + 1) % n]);
    for i in 0..n {
        let (a, b) = edge(i);
        if a == b {
            return Some((i, i));
        }
        for j in (i + 1)..n {
            let (c, d) = edge(j);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Shared vertex is expected; a fold-back along the same line is not.
                let (shared, other_i, other_j) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                if cross(other_i, shared, other_j) == 0.0 {
                    let (ux, uy) = other_i.sub(shared);
                    let (vx, vy) = other_j.sub(shared);
                    if ux * vx + uy * vy > 0.0 {
                        return Some((i, j));
                    }
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Sutherland-Hodgman clip of an arbitrary simple ring against a convex,
/// counter-clockwise clip ring.
///
/// The result may contain degenerate zero-width bridges when the subject is
/// concave, but its signed area equals the signed area of the intersection
/// (with the sign of the subject's orientation).
pub fn clip_to_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut output: Vec<Point> = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        let input = std::mem::take(&mut output);
        let inside = |p: &Point| cross(&a, &b, p) >= 0.0;
        let mut prev = *input.last().unwrap();
        let mut prev_in = inside(&prev);
        for cur in input {
            let cur_in = inside(&cur);
            if cur_in != prev_in {
                output.push(line_intersection(&prev, &cur, &a, &b));
            }
            if cur_in {
                output.push(cur);
            }
            prev = cur;
            prev_in = cur_in;
        }
    }
    output
}

fn line_intersection(p: &Point, q: &Point, a: &Point, b: &Point) -> Point {
    let dp = cross(a, b, p);
    let dq = cross(a, b, q);
    let t = dp / (dp - dq);
    Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
}

/// Area of the intersection of a ring with a convex counter-clockwise polygon.
pub fn clipped_area(subject: &[Point], convex: &[Point]) -> f64 {
    signed_area(&clip_to_convex(subject, convex)).abs()
}

/// A polygon with an exterior ring and zero or more holes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub exterior: Vec<Point>,
    pub holes: Vec<Vec<Point>>,
}

impl Polygon {
    pub fn new(exterior: Vec<Point>, holes: Vec<Vec<Point>>) -> Self {
        Polygon { exterior, holes }
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.exterior).abs() - self.holes.iter().map(|h| signed_area(h).abs()).sum::<f64>()
    }

    pub fn bbox(&self) -> Option<Rect> {
        Rect::of_points(&self.exterior)
    }

    /// Closed containment: boundary points (including hole boundaries) count as inside.
    pub fn contains(&self, p: &Point) -> bool {
        if locate_in_ring(p, &self.exterior) == Containment::Outside {
            return false;
        }
        !self.holes.iter().any(|h| locate_in_ring(p, h) == Containment::Inside)
    }

    /// Area of the part of this polygon inside a convex counter-clockwise polygon.
    pub fn area_within_convex(&self, convex: &[Point]) -> f64 {
        clipped_area(&self.exterior, convex) - self.holes.iter().map(|h| clipped_area(h, convex)).sum::<f64>()
    }

    pub fn rings(&self) -> impl Iterator<Item = &Vec<Point>> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }

    /// Whether the closed segment `a`-`b` touches the closed polygon.
    pub fn intersects_segment(&self, a: &Point, b: &Point) -> bool {
        if self.contains(a) || self.contains(b) {
            return true;
        }
        self.rings().any(|ring| {
            let n = ring.len();
            (0..n).any(|i| segments_intersect(a, b, &ring[i], &ring[(i + 1) % n]))
        })
    }
}

/// Ensures counter-clockwise orientation.
pub fn to_ccw(mut ring: Vec<Point>) -> Vec<Point> {
    if signed_area(&ring) < 0.0 {
        ring.reverse();
    }
    ring
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: f64, y0: f64, s: f64) -> Vec<Point> {
        Rect::new(x0, y0, x0 + s, y0 + s).to_ring()
    }

    #[test]
    fn shoelace_square_and_orientation() {
        let sq = square(0.0, 0.0, 100.0);
        assert_eq!(signed_area(&sq), 10_000.0);
        let mut cw = sq.clone();
        cw.reverse();
        assert_eq!(signed_area(&cw), -10_000.0);
    }

    #[test]
    fn polygon_with_hole_area() {
        let poly = Polygon::new(square(0.0, 0.0, 100.0), vec![square(25.0, 25.0, 50.0)]);
        assert_eq!(poly.area(), 7_500.0);
        assert!(poly.contains(&Point::new(10.0, 10.0)));
        assert!(!poly.contains(&Point::new(50.0, 50.0)));
        // hole boundary belongs to the polygon
        assert!(poly.contains(&Point::new(25.0, 50.0)));
        assert!(poly.contains(&Point::new(0.0, 50.0)));
        assert!(!poly.contains(&Point::new(-1.0, 50.0)));
    }

    #[test]
    fn centroid_of_square() {
        let c = ring_centroid(&square(10.0, 20.0, 4.0));
        assert!((c.x - 12.0).abs() < 1e-12 && (c.y - 22.0).abs() < 1e-12);
    }

    #[test]
    fn bowtie_is_self_intersecting() {
        let bowtie = vec![Point::new(0.0, 0.0), Point::new(10.0, 10.0), Point::new(10.0, 0.0), Point::new(0.0, 10.0)];
        assert!(first_self_intersection(&bowtie).is_some());
        assert!(first_self_intersection(&square(0.0, 0.0, 1.0)).is_none());
    }

    #[test]
    fn spike_is_self_intersecting() {
        let spike = vec![Point::new(0.0, 0.0), Point::new(10.0, 0.0), Point::new(5.0, 0.0), Point::new(5.0, 5.0)];
        assert!(first_self_intersection(&spike).is_some());
    }

    #[test]
    fn clip_concave_subject() {
        let u = vec![
            Point::new(0.0, 0.0),
            Point::new(3.0, 0.0),
            Point::new(3.0, 3.0),
            Point::new(2.0, 3.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 3.0),
            Point::new(0.0, 3.0),
        ];
        assert_eq!(signed_area(&u), 7.0);
        let window = Rect::new(0.0, 2.0, 3.0, 3.0).to_ring();
        assert!((clipped_area(&u, &window) - 2.0).abs() < 1e-12);
        let window = Rect::new(-1.0, -1.0, 4.0, 4.0).to_ring();
        assert!((clipped_area(&u, &window) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn segment_intersection_cases() {
        let p = Point::new;
        assert!(segments_intersect(&p(0., 0.), &p(2., 2.), &p(0., 2.), &p(2., 0.)));
        assert!(segments_intersect(&p(0., 0.), &p(1., 0.), &p(1., 0.), &p(2., 5.)));
        assert!(!segments_intersect(&p(0., 0.), &p(1., 0.), &p(2., 0.), &p(3., 0.)));
        assert!(segments_cross(&p(0., 0.), &p(2., 2.), &p(0., 2.), &p(2., 0.)));
        assert!(!segments_cross(&p(0., 0.), &p(1., 0.), &p(1., 0.), &p(2., 5.)));
    }

    #[test]
    fn segment_inside_hole_misses_polygon() {
        let poly = Polygon::new(square(0.0, 0.0, 100.0), vec![square(25.0, 25.0, 50.0)]);
        assert!(!poly.intersects_segment(&Point::new(30.0, 30.0), &Point::new(60.0, 60.0)));
        assert!(poly.intersects_segment(&Point::new(30.0, 30.0), &Point::new(90.0, 30.0)));
        assert!(!poly.intersects_segment(&Point::new(-10.0, 50.0), &Point::new(-10.0, 51.0)));
    }
}

//! Slow, obviously-correct reference computations on plain coordinates.
//!
//! Nothing here shares code with `floodprio-core`; tests feed both the same
//! inputs and compare.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Pt = [f64; 2];

#[derive(Clone, Debug, Default)]
pub struct PolygonData {
    pub exterior: Vec<Pt>,
    pub holes: Vec<Vec<Pt>>,
}

/// Even-odd ray casting; the ring is open (first vertex not repeated).
pub fn point_in_ring(p: Pt, ring: &[Pt]) -> bool {
    let mut inside = false;
    let n = ring.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn point_in_polygon(p: Pt, poly: &PolygonData) -> bool {
    point_in_ring(p, &poly.exterior) && !poly.holes.iter().any(|h| point_in_ring(p, h))
}

pub fn point_in_any(p: Pt, polys: &[PolygonData]) -> bool {
    polys.iter().any(|poly| point_in_polygon(p, poly))
}

fn orient(a: Pt, b: Pt, c: Pt) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: Pt, b: Pt, p: Pt) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed segment intersection, touching included.
pub fn segments_touch(a: Pt, b: Pt, c: Pt, d: Pt) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

fn ring_edges(ring: &[Pt]) -> impl Iterator<Item = (Pt, Pt)> + '_ {
    (0..ring.len()).map(move |i| (ring[i], ring[(i + 1) % ring.len()]))
}

/// Whether segment `ab` meets the closed polygon.
pub fn segment_touches_polygon(a: Pt, b: Pt, poly: &PolygonData) -> bool {
    if point_in_polygon(a, poly) || point_in_polygon(b, poly) {
        return true;
    }
    std::iter::once(&poly.exterior)
        .chain(&poly.holes)
        .any(|ring| ring_edges(ring).any(|(c, d)| segments_touch(a, b, c, d)))
}

pub fn polyline_touches_any(line: &[Pt], polys: &[PolygonData]) -> bool {
    line.windows(2).any(|w| polys.iter().any(|p| segment_touches_polygon(w[0], w[1], p)))
}

/// Share of a convex polygon inside the union of `polys`, estimated with one
/// jittered sample per cell of a `side`×`side` grid over the polygon's bbox.
pub fn monte_carlo_fraction(convex: &[Pt], polys: &[PolygonData], side: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in convex {
        x0 = x0.min(p[0]);
        y0 = y0.min(p[1]);
        x1 = x1.max(p[0]);
        y1 = y1.max(p[1]);
    }
    let (dx, dy) = ((x1 - x0) / side as f64, (y1 - y0) / side as f64);
    let mut inside = 0u64;
    let mut hit = 0u64;
    for i in 0..side {
        for j in 0..side {
            let p = [x0 + (i as f64 + rng.gen::<f64>()) * dx, y0 + (j as f64 + rng.gen::<f64>()) * dy];
            if !point_in_ring(p, convex) {
                continue;
            }
            inside += 1;
            if point_in_any(p, polys) {
                hit += 1;
            }
        }
    }
    hit as f64 / inside as f64
}

/// Nodes reachable from `sources` over undirected `edges`, skipping
/// `blocked` nodes and edges flagged in `cut`.
pub fn bfs_reachable(
    n: usize,
    edges: &[(usize, usize)],
    cut: &[bool],
    blocked: &[bool],
    sources: &[usize],
) -> Vec<bool> {
    let mut adj = vec![Vec::new(); n];
    for (k, &(a, b)) in edges.iter().enumerate() {
        if !cut[k] {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for &s in sources {
        if !blocked[s] && !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !blocked[w] && !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

/// Index of the nearest centre; for a regular hexagonal tiling this is the
/// tile containing the point.
pub fn nearest_center(p: Pt, centers: &[Pt]) -> usize {
    let d = |c: &Pt| (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2);
    let mut best = 0;
    for (i, c) in centers.iter().enumerate() {
        if d(c) < d(&centers[best]) {
            best = i;
        }
    }
    best
}

/// Criticality written out the way a spreadsheet would: one product per
/// column, then a running total.
pub fn spreadsheet_pdc(p: &[f64; 4], w: &[f64; 4]) -> f64 {
    let products: Vec<f64> = (0..4).map(|c| p[c] * w[c]).collect();
    products.iter().sum()
}

/// Optimal 1-D k-means by dynamic programming over ascending values.
/// Returns each value's cluster index counted from the top (0 = largest).
pub fn optimal_partition(sorted: &[f64], k: usize) -> Vec<usize> {
    let n = sorted.len();
    let mut prefix = vec![0.0; n + 1];
    let mut prefix_sq = vec![0.0; n + 1];
    for (i, v) in sorted.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
        prefix_sq[i + 1] = prefix_sq[i] + v * v;
    }
    let sse = |a: usize, b: usize| {
        let m = (b - a) as f64;
        let s = prefix[b] - prefix[a];
        (prefix_sq[b] - prefix_sq[a] - s * s / m).max(0.0)
    };
    let k = k.min(n);
    let mut cost = vec![vec![f64::INFINITY; n + 1]; k + 1];
    let mut cut = vec![vec![0usize; n + 1]; k + 1];
    cost[0][0] = 0.0;
    for c in 1..=k {
        for b in c..=n {
            for a in (c - 1)..b {
                let v = cost[c - 1][a] + sse(a, b);
                if v < cost[c][b] - 1e-15 {
                    cost[c][b] = v;
                    cut[c][b] = a;
                }
            }
        }
    }
    let mut labels = vec![0; n];
    let mut b = n;
    for c in (1..=k).rev() {
        let a = cut[c][b];
        for l in &mut labels[a..b] {
            *l = k - c;
        }
        b = a;
    }
    labels
}

/// Within-cluster sum of squares of a labelling.
pub fn partition_cost(values: &[f64], labels: &[usize]) -> f64 {
    let groups = labels.iter().max().map_or(0, |m| m + 1);
    (0..groups)
        .map(|c| {
            let members: Vec<f64> = values.iter().zip(labels).filter(|(_, l)| **l == c).map(|(v, _)| *v).collect();
            if members.is_empty() {
                return 0.0;
            }
            let mean = members.iter().sum::<f64>() / members.len() as f64;
            members.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        })
        .sum()
}

/// Random simple polygon around `centre`: one vertex per equal angular
/// sector, jittered within the sector. With five or more vertices the centre
/// lies inside, at distance above `0.42·r_min` from every edge.
pub fn random_star(rng: &mut impl Rng, centre: Pt, r_min: f64, r_max: f64, vertices: usize) -> Vec<Pt> {
    let sector = std::f64::consts::TAU / vertices as f64;
    (0..vertices)
        .map(|i| {
            let a = (i as f64 + rng.gen_range(0.1..0.9)) * sector;
            let r = rng.gen_range(r_min..r_max);
            [centre[0] + r * a.cos(), centre[1] + r * a.sin()]
        })
        .collect()
}

/// Pairwise-disjoint star polygons inside `[x0, x1] × [y0, y1]`, some with
/// a hole. Centres sit on a jittered lattice with spacing above twice the
/// largest radius.
pub fn random_flood(rng: &mut impl Rng, bounds: [f64; 4], count: usize, r_max: f64) -> Vec<PolygonData> {
    let [x0, y0, x1, y1] = bounds;
    let spacing = 2.2 * r_max;
    let cols = ((x1 - x0) / spacing).floor().max(1.0) as usize;
    let rows = ((y1 - y0) / spacing).floor().max(1.0) as usize;
    let mut cells: Vec<(usize, usize)> = (0..cols).flat_map(|c| (0..rows).map(move |r| (c, r))).collect();
    for i in (1..cells.len()).rev() {
        cells.swap(i, rng.gen_range(0..=i));
    }
    let slack = spacing / 2.0 - 1.05 * r_max;
    cells
        .into_iter()
        .take(count)
        .map(|(c, r)| {
            let centre = [
                x0 + (c as f64 + 0.5) * spacing + rng.gen_range(-slack..=slack),
                y0 + (r as f64 + 0.5) * spacing + rng.gen_range(-slack..=slack),
            ];
            let r_min = r_max * rng.gen_range(0.3..0.7);
            let vertices = rng.gen_range(5..12);
            let exterior = random_star(rng, centre, r_min, r_max, vertices);
            let holes = if rng.gen_bool(0.3) {
                let vertices = rng.gen_range(5..8);
                vec![random_star(rng, centre, 0.1 * r_min, 0.4 * r_min, vertices)]
            } else {
                Vec::new()
            };
            PolygonData { exterior, holes }
        })
        .collect()
}

/// Regular hexagon with corners at `centre + r·(cos θ, sin θ)`, θ = 30° + 60°·i.
pub fn hexagon(centre: Pt, r: f64) -> Vec<Pt> {
    (0..6)
        .map(|i| {
            let a = (30.0 + 60.0 * i as f64).to_radians();
            [centre[0] + r * a.cos(), centre[1] + r * a.sin()]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_casting_square_with_hole() {
        let poly = PolygonData {
            exterior: vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]],
            holes: vec![vec![[4.0, 4.0], [6.0, 4.0], [6.0, 6.0], [4.0, 6.0]]],
        };
        assert!(point_in_polygon([1.0, 1.0], &poly));
        assert!(!point_in_polygon([5.0, 5.0], &poly));
        assert!(!point_in_polygon([11.0, 5.0], &poly));
        assert!(segment_touches_polygon([-1.0, 5.0], [0.0, 5.0], &poly));
        assert!(!segment_touches_polygon([-2.0, 5.0], [-0.5, 5.0], &poly));
    }

    #[test]
    fn monte_carlo_half_square() {
        let square = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let half = PolygonData { exterior: vec![[0.0, 0.0], [0.5, 0.0], [0.5, 1.0], [0.0, 1.0]], holes: vec![] };
        assert!((monte_carlo_fraction(&square, &[half], 300, 1) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn dp_partition_small() {
        assert_eq!(optimal_partition(&[0.1, 0.12, 0.5, 0.52, 0.9, 0.95], 3), vec![2, 2, 1, 1, 0, 0]);
        assert_eq!(optimal_partition(&[0.3, 0.4], 3), vec![1, 0]);
    }

    #[test]
    fn bfs_respects_blocks() {
        let edges = [(0, 1), (1, 2), (2, 3)];
        let r = bfs_reachable(4, &edges, &[false, false, false], &[false, false, true, false], &[0]);
        assert_eq!(r, vec![true, true, false, false]);
        let r = bfs_reachable(4, &edges, &[false, true, false], &[false; 4], &[3]);
        assert_eq!(r, vec![false, false, true, true]);
    }
}

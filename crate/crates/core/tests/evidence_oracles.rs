use floodprio_core::evidence::{
    build_evidence, exposed_building_counts, facility_presence, flood_fraction, immediate_unexposed_fractions,
    remote_accessibility, EvidenceInputs, PercentileLevels,
};
use floodprio_core::geo_ingest::{snap_destinations, FloodLayer, LabelledPoint, RoadNetwork, RoadNode, SiteSet};
use floodprio_core::geometry::{Point, Polygon, Rect};
use floodprio_core::hexgrid::HexGrid;
use floodprio_oracles as oracle;
use floodprio_oracles::{PolygonData, Pt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BOUNDS: [f64; 4] = [0.0, 0.0, 3000.0, 2600.0];

fn to_point(p: &Pt) -> Point {
    Point::new(p[0], p[1])
}

fn to_layer(polys: &[PolygonData]) -> FloodLayer {
    let polygons = polys
        .iter()
        .map(|p| {
            Polygon::new(
                p.exterior.iter().map(to_point).collect(),
                p.holes.iter().map(|h| h.iter().map(to_point).collect()).collect(),
            )
        })
        .collect();
    FloodLayer::new(polygons, "random").unwrap()
}

fn grid() -> HexGrid {
    HexGrid::build(Rect::new(BOUNDS[0], BOUNDS[1], BOUNDS[2], BOUNDS[3]), 420.0).unwrap()
}

fn centres(grid: &HexGrid) -> Vec<Pt> {
    grid.tiles().iter().map(|t| [t.centroid.x, t.centroid.y]).collect()
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Pt> {
    (0..n).map(|_| [rng.gen_range(BOUNDS[0]..BOUNDS[2]), rng.gen_range(BOUNDS[1]..BOUNDS[3])]).collect()
}

#[test]
fn exposed_counts_match_brute_force() {
    let grid = grid();
    let centres = centres(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let polys = oracle::random_flood(&mut rng, BOUNDS, 6, 450.0);
        let flood = to_layer(&polys);
        let pts = random_points(&mut rng, 500);
        let sites = SiteSet::from_points(pts.iter().enumerate().map(|(i, p)| (format!("b{i}"), to_point(p)))).unwrap();
        let mut expected = vec![0u32; grid.len()];
        for p in &pts {
            if oracle::point_in_any(*p, &polys) {
                expected[oracle::nearest_center(*p, &centres)] += 1;
            }
        }
        assert_eq!(exposed_building_counts(&grid, &sites, &flood), expected);
        let presence: Vec<bool> = expected.iter().map(|c| *c > 0).collect();
        assert_eq!(facility_presence(&grid, &sites, &flood), presence);
    }
}

#[test]
fn flood_fraction_matches_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..20 {
        let centre = [rng.gen_range(500.0..2500.0), rng.gen_range(500.0..2100.0)];
        let hex = oracle::hexagon(centre, 210.0);
        let polys = oracle::random_flood(
            &mut rng,
            [centre[0] - 500.0, centre[1] - 500.0, centre[0] + 500.0, centre[1] + 500.0],
            4,
            220.0,
        );
        let flood = to_layer(&polys);
        let ring: Vec<Point> = hex.iter().map(to_point).collect();
        let exact = flood_fraction(&ring, &flood);
        let sampled = oracle::monte_carlo_fraction(&hex, &polys, 400, case);
        assert!((exact - sampled).abs() < 2e-3, "case {case}: {exact} vs {sampled}");
    }
}

/// Random planar-ish road graph: nodes scattered over the bbox, edges to
/// near neighbours.
fn random_roads(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Pt>, Vec<(usize, usize)>) {
    let nodes = random_points(rng, n);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = ((nodes[i][0] - nodes[j][0]).powi(2) + (nodes[i][1] - nodes[j][1]).powi(2)).sqrt();
            if d < 900.0 && rng.gen_bool(0.5) {
                edges.push((i, j));
            }
        }
    }
    (nodes, edges)
}

fn to_network(nodes: &[Pt], edges: &[(usize, usize)]) -> RoadNetwork {
    RoadNetwork::new(
        nodes.iter().enumerate().map(|(i, p)| RoadNode { id: i as i64, location: to_point(p) }).collect(),
        edges.iter().enumerate().map(|(k, &(a, b))| (format!("e{k}"), a as i64, b as i64, Vec::new())).collect(),
    )
    .unwrap()
}

#[test]
fn accessibility_matches_bfs() {
    let grid = grid();
    let centres = centres(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    while checked < 20 {
        let n = rng.gen_range(10..=50);
        let (nodes, edges) = random_roads(&mut rng, n);
        let patches = rng.gen_range(1..5);
        let polys = oracle::random_flood(&mut rng, BOUNDS, patches, 500.0);
        let flood = to_layer(&polys);
        let net = to_network(&nodes, &edges);
        let dry: Vec<usize> = (0..nodes.len()).filter(|&i| !oracle::point_in_any(nodes[i], &polys)).collect();
        if dry.is_empty() {
            continue;
        }
        let dest = dry[rng.gen_range(0..dry.len())];
        let dests = snap_destinations(
            &net,
            &flood,
            &[LabelledPoint { label: "d".into(), location: to_point(&nodes[dest]) }],
            1.0,
        )
        .unwrap();
        let blocked: Vec<bool> = nodes.iter().map(|p| oracle::point_in_any(*p, &polys)).collect();
        let cut: Vec<bool> =
            edges.iter().map(|&(a, b)| oracle::polyline_touches_any(&[nodes[a], nodes[b]], &polys)).collect();
        let mut expected = vec![false; grid.len()];
        for (i, p) in nodes.iter().enumerate() {
            if blocked[i] {
                continue;
            }
            let reach = oracle::bfs_reachable(nodes.len(), &edges, &cut, &blocked, &[i]);
            if reach[dest] {
                expected[oracle::nearest_center(*p, &centres)] = true;
            }
        }
        assert_eq!(remote_accessibility(&grid, &net, &flood, &dests), expected);
        checked += 1;
    }
}

fn scaled(polys: &[PolygonData], factor: f64) -> Vec<PolygonData> {
    // scale every polygon about its vertex mean
    polys
        .iter()
        .map(|p| {
            let n = p.exterior.len() as f64;
            let c =
                [p.exterior.iter().map(|v| v[0]).sum::<f64>() / n, p.exterior.iter().map(|v| v[1]).sum::<f64>() / n];
            let s = |v: &Pt| [c[0] + (v[0] - c[0]) * factor, c[1] + (v[1] - c[1]) * factor];
            PolygonData { exterior: p.exterior.iter().map(s).collect(), holes: Vec::new() }
        })
        .collect()
}

#[test]
fn growing_flood_is_monotone() {
    let grid = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (nodes, edges) = random_roads(&mut rng, 40);
    let net = to_network(&nodes, &edges);
    let pts = random_points(&mut rng, 400);
    let buildings = SiteSet::from_points(pts.iter().enumerate().map(|(i, p)| (format!("b{i}"), to_point(p)))).unwrap();
    let facilities =
        SiteSet::from_points(pts.iter().take(20).enumerate().map(|(i, p)| (format!("f{i}"), to_point(p)))).unwrap();
    // convex hexagonal seeds grow by scaling about their centroid, so every
    // step contains the previous one
    let seeds: Vec<PolygonData> = [[700.0, 700.0], [2200.0, 1800.0], [2300.0, 600.0]]
        .iter()
        .map(|c| PolygonData { exterior: oracle::hexagon(*c, 150.0), holes: Vec::new() })
        .collect();
    let dest_point = nodes
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            seeds.iter().all(|s| ((p[0] - s.exterior[0][0]).abs() + (p[1] - s.exterior[0][1]).abs()) > 1200.0)
        })
        .map(|(i, _)| i)
        .next()
        .expect("a node far from every seed");
    let mut previous: Option<(Vec<f64>, Vec<bool>, Vec<u32>)> = None;
    for step in 0..5 {
        let polys = scaled(&seeds, 1.0 + 0.6 * step as f64);
        let flood = to_layer(&polys);
        let dests = snap_destinations(
            &net,
            &flood,
            &[LabelledPoint { label: "d".into(), location: to_point(&nodes[dest_point]) }],
            1.0,
        )
        .unwrap();
        let set = build_evidence(
            &grid,
            EvidenceInputs {
                flood: &flood,
                buildings: &buildings,
                facilities: &facilities,
                network: &net,
                destinations: &dests,
            },
            PercentileLevels::default(),
        );
        let immediate: Vec<f64> = set.bundles.iter().map(|b| b.immediate_unexposed).collect();
        assert_eq!(immediate, immediate_unexposed_fractions(&grid, &flood));
        let access: Vec<bool> = set.bundles.iter().map(|b| b.remote_accessible).collect();
        let counts: Vec<u32> = set.bundles.iter().map(|b| b.exposed_building_count).collect();
        if let Some((pi, pa, pc)) = &previous {
            for t in 0..grid.len() {
                assert!(immediate[t] <= pi[t], "step {step} tile {t}: {} > {}", immediate[t], pi[t]);
                assert!(!access[t] || pa[t], "step {step} tile {t} became accessible");
                assert!(counts[t] >= pc[t]);
            }
        }
        previous = Some((immediate, access, counts));
    }
}

"""Writes the synthetic city used by the service tests.

A river band crosses the city west to east and widens over five flood
steps; a lake in the south-east grows alongside. Each step contains the
previous one. Output goes next to this script in city/.
"""

import json
import math
from pathlib import Path

import numpy as np

CRS = {"type": "name", "properties": {"name": "EPSG:25832"}}
BBOX = (0.0, 0.0, 3000.0, 2600.0)
OUT = Path(__file__).resolve().parent / "city"
STEPS = 5


def collection(features, **extra):
    return {"type": "FeatureCollection", "crs": CRS, **extra, "features": features}


def write(name, obj):
    (OUT / name).write_text(json.dumps(obj, indent=None, separators=(",", ":")) + "\n")


def circle(cx, cy, r, n=16):
    pts = [[round(cx + r * math.cos(2 * math.pi * i / n), 3), round(cy + r * math.sin(2 * math.pi * i / n), 3)] for i in range(n)]
    return pts + [pts[0]]


def flood_step(s):
    i = s - 1
    half = 90.0 + 40.0 * i
    east = 1500.0 + 400.0 * i
    band = [[-100.0, 1300.0 - half], [east, 1300.0 - half], [east, 1300.0 + half], [-100.0, 1300.0 + half], [-100.0, 1300.0 - half]]
    rings = [band]
    island = 60.0 - 15.0 * i
    if island > 0:
        rings.append(list(reversed(circle(600.0, 1300.0, island))))
    lake = circle(2400.0, 450.0, 120.0 + 50.0 * i)
    features = [
        {"type": "Feature", "id": "river", "properties": {}, "geometry": {"type": "Polygon", "coordinates": rings}},
        {"type": "Feature", "id": "lake", "properties": {}, "geometry": {"type": "Polygon", "coordinates": [lake]}},
    ]
    return collection(features, version_tag=f"step-{s}")


def buildings(rng):
    groups = [((1500.0, 1300.0), 350.0, 500), ((700.0, 1700.0), 200.0, 250), ((2300.0, 800.0), 250.0, 250)]
    pts = []
    for (cx, cy), sd, n in groups:
        pts.extend(zip(rng.normal(cx, sd, n), rng.normal(cy, sd, n)))
    pts.extend(zip(rng.uniform(BBOX[0], BBOX[2], 200), rng.uniform(BBOX[1], BBOX[3], 200)))
    feats = []
    for k, (x, y) in enumerate(pts):
        if not (BBOX[0] < x < BBOX[2] and BBOX[1] < y < BBOX[3]):
            continue
        x, y = round(float(x), 2), round(float(y), 2)
        if k % 10 == 0:
            # square footprint of side 12 m centred on the point
            sq = [[x - 6, y - 6], [x + 6, y - 6], [x + 6, y + 6], [x - 6, y + 6], [x - 6, y - 6]]
            geom = {"type": "Polygon", "coordinates": [sq]}
        else:
            geom = {"type": "Point", "coordinates": [x, y]}
        feats.append({"type": "Feature", "id": f"b{k}", "properties": {}, "geometry": geom})
    return collection(feats)


def facilities(rng):
    pts = list(zip(rng.uniform(100, 2900, 10), rng.uniform(100, 2500, 10)))
    # two care homes on the river bank and one by the lake
    pts += [(1200.0, 1250.0), (1850.0, 1390.0), (2350.0, 500.0)]
    feats = [
        {"type": "Feature", "id": f"f{k}", "properties": {"kind": "care"}, "geometry": {"type": "Point", "coordinates": [round(float(x), 2), round(float(y), 2)]}}
        for k, (x, y) in enumerate(pts)
    ]
    return collection(feats)


def roads(rng):
    step = 250.0
    nx_, ny_ = 13, 11
    node_id = lambda i, j: 1000 + j * nx_ + i
    feats = []
    for j in range(ny_):
        for i in range(nx_):
            feats.append({"type": "Feature", "properties": {"node_id": node_id(i, j)}, "geometry": {"type": "Point", "coordinates": [i * step, j * step]}})
    seg = 0
    for j in range(ny_):
        for i in range(nx_):
            for di, dj in ((1, 0), (0, 1)):
                a, b = i + di, j + dj
                if a >= nx_ or b >= ny_ or rng.random() < 0.12:
                    continue
                p, q = [i * step, j * step], [a * step, b * step]
                line = [p, q]
                if rng.random() < 0.25:
                    bend = [(p[0] + q[0]) / 2 + 20.0 * dj, (p[1] + q[1]) / 2 + 20.0 * di]
                    line = [p, bend, q]
                feats.append({
                    "type": "Feature",
                    "id": f"r{seg}",
                    "properties": {"node_from": node_id(i, j), "node_to": node_id(a, b)},
                    "geometry": {"type": "LineString", "coordinates": line},
                })
                seg += 1
    return collection(feats)


CONFIG = """name = "synthetic city"
crs = "EPSG:25832"
bbox = [0.0, 0.0, 3000.0, 2600.0]
max_width = 420.0
max_snap = 150.0
k = 3

[inputs]
flood = "flood_step1.geojson"
buildings = "buildings.geojson"
facilities = "facilities.geojson"
roads = "roads.geojson"

[[destinations]]
label = "north-west shelter"
x = 510.0
y = 2490.0

[[destinations]]
label = "north-east shelter"
x = 2480.0
y = 2520.0
"""


def main():
    OUT.mkdir(exist_ok=True)
    rng = np.random.default_rng(20240611)
    write("buildings.geojson", buildings(rng))
    write("facilities.geojson", facilities(rng))
    write("roads.geojson", roads(rng))
    for s in range(1, STEPS + 1):
        write(f"flood_step{s}.geojson", flood_step(s))
    (OUT / "config.toml").write_text(CONFIG)


if __name__ == "__main__":
    main()

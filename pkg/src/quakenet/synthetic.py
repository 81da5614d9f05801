"""Synthetic routes, rings and scenarios used by the examples and the test suite.

``python -m quakenet.synthetic DIR`` regenerates the shipped scenario files.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import numpy as np

from .geometry import Polyline, convex_hull

# irregular 12-node ring: polar angles (degrees) and radii (km) of the nodes
RING12_ANGLES = (0, 25, 55, 80, 110, 150, 175, 205, 240, 270, 300, 330)
RING12_RADII = (10, 11, 9.5, 10.5, 12, 10, 9, 11, 10.5, 9.5, 11, 10)
RING12_WEAK = "3-4"


def zigzag(n_fold: int, total_length: float, phi: float = math.pi / 2, start=(0.0, 0.0)) -> Polyline:
    """Route of ``n_fold`` equal segments with inner angle ``phi`` at every joint, running along +x."""
    seg = total_length / n_fold
    half = 0.5 * (math.pi - phi)
    pts = [start]
    for i in range(n_fold):
        ang = half if i % 2 == 0 else -half
        if n_fold == 1:
            ang = 0.0
        x, y = pts[-1]
        pts.append((x + seg * math.cos(ang), y + seg * math.sin(ang)))
    return Polyline(tuple(pts))


def centred(route: Polyline) -> Polyline:
    """Translate ``route`` so its bounding box is centred on the origin."""
    xy = route.coords
    c = 0.5 * (xy.min(axis=0) + xy.max(axis=0))
    return Polyline(tuple(map(tuple, xy - c)))


def semicircle(radius: float, upper: bool, segments: int = 64) -> Polyline:
    """Half circle from (-r, 0) to (r, 0) through the upper or lower half plane."""
    t = np.linspace(math.pi, 0.0, segments + 1)
    sign = 1.0 if upper else -1.0
    pts = np.column_stack([radius * np.cos(t), sign * radius * np.sin(t)])
    pts[0], pts[-1] = (-radius, 0.0), (radius, 0.0)
    return Polyline(tuple(map(tuple, pts)))


def hexagon_route(radius: float, upper: bool) -> Polyline:
    """Half of the regular hexagon inscribed in the circle, from (-r, 0) to (r, 0)."""
    sign = 1.0 if upper else -1.0
    h = sign * radius * math.sqrt(3.0) / 2.0
    return Polyline(((-radius, 0.0), (-radius / 2, h), (radius / 2, h), (radius, 0.0)))


def concave_route(radius: float, upper: bool, dent: float = 0.35) -> Polyline:
    """Half hexagon with its middle pushed towards the chord, making the ring concave."""
    sign = 1.0 if upper else -1.0
    h = sign * radius * math.sqrt(3.0) / 2.0
    return Polyline(((-radius, 0.0), (-radius / 2, h), (0.0, sign * dent * radius), (radius / 2, h), (radius, 0.0)))


def inner_family(radius: float, offsets=(-0.3, 0.0, 0.3)) -> list[Polyline]:
    """Routes from (-r, 0) to (r, 0) lying inside the ring, one per vertical offset."""
    out = []
    for off in offsets:
        if off == 0.0:
            out.append(Polyline(((-radius, 0.0), (radius, 0.0))))
        else:
            out.append(Polyline(((-radius, 0.0), (0.0, off * radius), (radius, 0.0))))
    return out


def random_convex_polygon(rng: np.random.Generator, points: int = 8):
    """Hull of uniform points in the unit disk."""
    r = np.sqrt(rng.random(points))
    t = rng.uniform(0.0, 2.0 * math.pi, points)
    return convex_hull(np.column_stack([r * np.cos(t), r * np.sin(t)]))


def _node(nid, x, y, alpha=0.0):
    return {"id": str(nid), "x": float(x), "y": float(y), "alpha": float(alpha)}


def circle_ring_scenario(radius: float, per_side: int, beta: float, disaster_radius: float,
                         arc_points: int = 8, alpha: float = 0.0) -> dict:
    """Circular ring with ``per_side`` arc links on each half; s = node 0 at (-r, 0), t opposite."""
    n = 2 * per_side
    ang = math.pi - 2.0 * math.pi * np.arange(n) / n
    nodes = [_node(i, radius * math.cos(a), radius * math.sin(a), alpha) for i, a in enumerate(ang)]
    links = []
    for i in range(n):
        j = (i + 1) % n
        t = np.linspace(ang[i], ang[i] - 2.0 * math.pi / n, arc_points + 1)
        path = [[radius * math.cos(v), radius * math.sin(v)] for v in t]
        path[0] = [nodes[i]["x"], nodes[i]["y"]]
        path[-1] = [nodes[j]["x"], nodes[j]["y"]]
        links.append({"id": f"l{i}", "from": str(i), "to": str(j), "beta": beta, "path": path})
    upper = [f"l{i}" for i in range(per_side)]
    lower = [f"l{i}" for i in range(n - 1, per_side - 1, -1)]
    return {
        "description": "Synthetic symmetric circular ring.",
        "region": {"disk": {"cx": 0.0, "cy": 0.0, "r": radius + 0.5}},
        "disaster": {"disk": {"cx": 0.0, "cy": 0.0, "r": disaster_radius}},
        "nodes": nodes,
        "links": links,
        "routes": [{"name": "upper", "s": "0", "t": str(per_side), "links": upper},
                   {"name": "lower", "s": "0", "t": str(per_side), "links": lower}],
        "ring_pairs": [{"name": "ring", "route1": "upper", "route2": "lower"}],
    }


def ring12_scenario(beta: float = 5e-4, weak_ratio: float = 10.0, weak: str | None = RING12_WEAK,
                    disaster_radius: float = 3.0) -> dict:
    """Synthetic irregular 12-node ring with one weak link (rate ``weak_ratio`` times the rest)."""
    nodes = [_node(i + 1, round(r * math.cos(math.radians(a)), 3), round(r * math.sin(math.radians(a)), 3))
             for i, (a, r) in enumerate(zip(RING12_ANGLES, RING12_RADII))]
    links = []
    for i in range(12):
        a, b = nodes[i], nodes[(i + 1) % 12]
        lid = f"{a['id']}-{b['id']}"
        rate = beta * (weak_ratio if lid == weak else 1.0)
        links.append({"id": lid, "from": a["id"], "to": b["id"], "beta": rate,
                      "path": [[a["x"], a["y"]], [b["x"], b["y"]]]})
    return {
        "description": "Synthetic 12-node ring network (not measured data); link 3-4 is the weak link.",
        "region": {"disk": {"cx": 0.0, "cy": 0.0, "r": 15.0}},
        "disaster": {"disk": {"cx": 0.0, "cy": 0.0, "r": disaster_radius}},
        "nodes": nodes,
        "links": links,
        "routes": [
            {"name": "east", "s": "1", "t": "7", "links": [l["id"] for l in links[:6]]},
            {"name": "west", "s": "1", "t": "7", "links": [l["id"] for l in links[6:]][::-1]},
        ],
        "ring_pairs": [{"name": "ring_1_7", "route1": "east", "route2": "west"}],
    }


def zigzag_scenario(n_fold: int = 7, total_length: float = 21.0, beta: float = 1e-3) -> dict:
    """Folded route through a hexagonal disaster area's region, one link per segment."""
    route = centred(zigzag(n_fold, total_length))
    xy = route.coords
    nodes = [_node(i, x, y) for i, (x, y) in enumerate(xy)]
    links = [{"id": f"z{i}", "from": str(i), "to": str(i + 1), "beta": beta,
              "path": [list(xy[i]), list(xy[i + 1])]} for i in range(n_fold)]
    hexagon = [[math.cos(k * math.pi / 3), math.sin(k * math.pi / 3)] for k in range(6)]
    return {
        "description": "Synthetic folded route with a convex hexagonal disaster area.",
        "region": {"disk": {"cx": 0.0, "cy": 0.0, "r": 0.5 * total_length + 0.5}},
        "disaster": {"reference": [0.0, 0.0], "parts": [hexagon]},
        "nodes": nodes,
        "links": links,
        "routes": [{"name": "folded", "s": "0", "t": str(n_fold), "links": [l["id"] for l in links]}],
    }


def multipart_scenario() -> dict:
    """Two-part, non-convex disaster area over a small tree network; Monte Carlo only."""
    l_shape = [[0, 0], [2, 0], [2, 0.8], [0.8, 0.8], [0.8, 2], [0, 2]]
    blob = [[3.5, 0], [4.5, 0], [4.5, 1], [3.5, 1]]
    nodes = [_node("a", -4, 0, 0.05), _node("b", 0, 0, 0.05), _node("c", 4, 0, 0.05), _node("d", 0, 4, 0.05)]
    links = [
        {"id": "ab", "from": "a", "to": "b", "beta": 0.002, "path": [[-4, 0], [-2, 1], [0, 0]]},
        {"id": "bc", "from": "b", "to": "c", "beta": 0.002, "path": [[0, 0], [4, 0]]},
        {"id": "bd", "from": "b", "to": "d", "beta": 0.002, "path": [[0, 0], [0, 4]]},
    ]
    return {
        "description": "Synthetic non-convex, two-part disaster area over a star network.",
        "region": {"polygon": [[-6, -3], [6, -3], [6, 6], [-6, 6]]},
        "disaster": {"reference": [1.0, 1.0], "parts": [l_shape, blob]},
        "nodes": nodes,
        "links": links,
        "routes": [{"name": "a-c", "s": "a", "t": "c", "links": ["ab", "bc"]},
                   {"name": "a-d", "s": "a", "t": "d", "links": ["ab", "bd"]}],
    }


SHIPPED = {
    "ring12.json": lambda: ring12_scenario(),
    "circle_ring.json": lambda: circle_ring_scenario(2.0, 6, 0.0075, 4.0),
    "zigzag.json": lambda: zigzag_scenario(),
    "multipart.json": lambda: multipart_scenario(),
}


def write_all(directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name, build in SHIPPED.items():
        path = directory / name
        path.write_text(json.dumps(build(), indent=1) + "\n")
        out.append(path)
    return out


if __name__ == "__main__":
    for p in write_all(sys.argv[1] if len(sys.argv) > 1 else "scenarios"):
        print(p)

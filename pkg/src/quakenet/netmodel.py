"""Scenario data model: nodes, links with physical paths, routes and ring pairs.

A scenario document is a JSON object::

    {
      "region":   {"disk": {"cx": 0, "cy": 0, "r": 10}}   or {"polygon": [[x, y], ...]},
      "disaster": {"reference": [x, y], "parts": [[[x, y], ...], ...]}
                  or {"disk": {"cx": 0, "cy": 0, "r": 2}},
      "nodes":    [{"id": "1", "x": 0, "y": 0, "alpha": 0.0}, ...],
      "links":    [{"id": "a", "from": "1", "to": "2", "beta": 0.01, "path": [[x, y], ...]}, ...],
      "routes":   [{"name": "r1", "s": "1", "t": "2", "links": ["a", ...]}, ...],
      "ring_pairs": [{"name": "ring", "route1": "r1", "route2": "r2"}, ...]
    }

Lengths are km, ``alpha`` is a probability, ``beta`` a failure rate per km.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import networkx as nx
import numpy as np

from .errors import GeometryError, ScenarioError
from .geometry import ConvexRegion, DisasterArea, Point, Polyline

PATH_TOL = 1e-6


def node_sort_key(node_id: str):
    """Natural ordering for ids: numeric ids first, by value."""
    s = str(node_id)
    return (0, int(s), s) if s.lstrip("-").isdigit() else (1, 0, s)


@dataclass(frozen=True)
class Node:
    id: str
    location: Point
    alpha: float = 0.0


@dataclass(frozen=True, eq=False)
class Link:
    id: str
    source: str
    target: str
    path: Polyline
    beta: float = 0.0

    @property
    def length(self) -> float:
        return self.path.length

    def oriented(self, start: str) -> Polyline:
        """Path traversed starting from node ``start``."""
        return self.path if start == self.source else self.path.reversed()


@dataclass(frozen=True)
class Route:
    name: str
    s: str
    t: str
    links: tuple[str, ...]


@dataclass(frozen=True)
class RingPair:
    name: str
    route1: str
    route2: str


@dataclass(frozen=True)
class FailureDraw:
    """Failed nodes, plus fault positions (km along each link's path from its source)."""

    failed_nodes: frozenset = frozenset()
    failed_points: dict = field(default_factory=dict)

    def failed_links(self) -> set:
        return {k for k, v in self.failed_points.items() if len(v)}


@dataclass(frozen=True, eq=False)
class NetworkScenario:
    region: ConvexRegion
    disaster: DisasterArea
    nodes: dict
    links: dict
    routes: dict = field(default_factory=dict)
    ring_pairs: dict = field(default_factory=dict)

    @cached_property
    def graph(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        for n in self.nodes.values():
            g.add_node(n.id)
        for ln in self.links.values():
            g.add_edge(ln.source, ln.target, key=ln.id)
        return g

    @property
    def node_ids(self) -> list[str]:
        return sorted(self.nodes, key=node_sort_key)

    def route_nodes(self, route: Route | str) -> list[str]:
        """Node ids along ``route`` from s to t."""
        route = self.routes[route] if isinstance(route, str) else route
        seq = [route.s]
        for lid in route.links:
            ln = self.links[lid]
            seq.append(ln.target if seq[-1] == ln.source else ln.source)
        return seq

    def route_legs(self, route: Route | str) -> list[tuple[str, Link, Polyline]]:
        """(start node, link, oriented path) for every link of ``route``."""
        route = self.routes[route] if isinstance(route, str) else route
        nodes = self.route_nodes(route)
        return [(a, self.links[lid], self.links[lid].oriented(a)) for a, lid in zip(nodes, route.links)]

    def route_polyline(self, route: Route | str) -> Polyline:
        verts: list = []
        for _, _, path in self.route_legs(route):
            pts = list(path.vertices)
            verts.extend(pts if not verts else pts[1:])
        return Polyline(tuple(verts))

    def route_length(self, route: Route | str) -> float:
        route = self.routes[route] if isinstance(route, str) else route
        return float(sum(self.links[lid].length for lid in route.links))

    def with_betas(self, betas: dict | float) -> "NetworkScenario":
        """Copy with link failure rates replaced (a mapping or one value for all)."""
        links = {}
        for lid, ln in self.links.items():
            b = betas if isinstance(betas, (int, float)) else betas.get(lid, ln.beta)
            links[lid] = Link(ln.id, ln.source, ln.target, ln.path, float(b))
        return NetworkScenario(self.region, self.disaster, self.nodes, links, self.routes, self.ring_pairs)

    def with_disaster(self, disaster: DisasterArea) -> "NetworkScenario":
        return NetworkScenario(self.region, disaster, self.nodes, self.links, self.routes, self.ring_pairs)

    def restricted(self, link_ids) -> "NetworkScenario":
        """Sub-scenario keeping only the given links and their end nodes."""
        link_ids = list(dict.fromkeys(link_ids))
        links = {lid: self.links[lid] for lid in link_ids}
        keep = {ln.source for ln in links.values()} | {ln.target for ln in links.values()}
        nodes = {k: v for k, v in self.nodes.items() if k in keep}
        return NetworkScenario(self.region, self.disaster, nodes, links)


# ---------------------------------------------------------------- loading


def _pt(value, where, errors):
    try:
        x, y = value
        x, y = float(x), float(y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError
        return (x, y)
    except (TypeError, ValueError):
        errors.append(f"{where}: expected a finite [x, y] pair")
        return None


def _region(doc, errors):
    if not isinstance(doc, dict):
        errors.append("region: expected an object")
        return None
    try:
        if "disk" in doc:
            d = doc["disk"]
            return ConvexRegion.disk(float(d["cx"]), float(d["cy"]), float(d["r"]))
        if "polygon" in doc:
            pts = [_pt(p, f"region.polygon[{i}]", errors) for i, p in enumerate(doc["polygon"])]
            if None in pts:
                return None
            return ConvexRegion.from_polygon(pts)
        errors.append("region: expected 'disk' or 'polygon'")
    except (KeyError, TypeError, ValueError, GeometryError) as exc:
        errors.append(f"region: {exc}")
    return None


def _disaster(doc, errors):
    if not isinstance(doc, dict):
        errors.append("disaster: expected an object")
        return None
    try:
        if "disk" in doc:
            d = doc["disk"]
            return DisasterArea.disk(float(d["r"]), (float(d["cx"]), float(d["cy"])))
        parts = []
        for i, part in enumerate(doc["parts"]):
            pts = [_pt(p, f"disaster.parts[{i}][{j}]", errors) for j, p in enumerate(part)]
            if None in pts:
                return None
            parts.append(pts)
        ref = doc.get("reference")
        if ref is not None:
            ref = _pt(ref, "disaster.reference", errors)
            if ref is None:
                return None
        return DisasterArea.multipart(parts, ref)
    except (KeyError, TypeError) as exc:
        errors.append(f"disaster: missing or malformed field {exc}")
    except GeometryError as exc:
        errors.append(f"disaster: {exc}")
    return None


def _load_dict(doc: dict) -> NetworkScenario:
    errors: list[str] = []
    if not isinstance(doc, dict):
        raise ScenarioError(["<root>: expected an object"])
    for key in ("region", "disaster", "nodes", "links"):
        if key not in doc:
            errors.append(f"<root>: missing key '{key}'")
    if errors:
        raise ScenarioError(errors)

    region = _region(doc["region"], errors)
    disaster = _disaster(doc["disaster"], errors)

    nodes: dict[str, Node] = {}
    for i, nd in enumerate(doc["nodes"]):
        where = f"nodes[{i}]"
        try:
            nid = str(nd["id"])
            loc = _pt((nd["x"], nd["y"]), where, errors)
            alpha = float(nd.get("alpha", 0.0))
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"{where}: missing or malformed field {exc}")
            continue
        if nid in nodes:
            errors.append(f"{where}.id: duplicate node id {nid!r}")
        if not 0.0 <= alpha <= 1.0:
            errors.append(f"{where}.alpha: must lie in [0, 1]")
        if loc is not None:
            nodes[nid] = Node(nid, Point(*loc), alpha)

    links: dict[str, Link] = {}
    for i, ld in enumerate(doc["links"]):
        where = f"links[{i}]"
        try:
            lid, a, b = str(ld["id"]), str(ld["from"]), str(ld["to"])
            beta = float(ld.get("beta", 0.0))
            raw_path = ld.get("path")
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"{where}: missing or malformed field {exc}")
            continue
        if lid in links:
            errors.append(f"{where}.id: duplicate link id {lid!r}")
        if beta < 0:
            errors.append(f"{where}.beta: must be non-negative")
        if a not in nodes or b not in nodes:
            errors.append(f"{where}: unknown endpoint node")
            continue
        if a == b:
            errors.append(f"{where}: self-loop")
            continue
        if raw_path is None:
            pts = [tuple(nodes[a].location), tuple(nodes[b].location)]
        else:
            pts = [_pt(p, f"{where}.path[{j}]", errors) for j, p in enumerate(raw_path)]
            if None in pts:
                continue
        try:
            path = Polyline(tuple(pts))
        except GeometryError as exc:
            errors.append(f"{where}.path: {exc}")
            continue
        for end, nid, k in ((path.vertices[0], a, 0), (path.vertices[-1], b, len(pts) - 1)):
            gap = math.dist(end, nodes[nid].location)
            if gap > PATH_TOL:
                errors.append(f"{where}.path[{k}]: {gap:.6g} km from node {nid!r}")
        links[lid] = Link(lid, a, b, path, beta)

    if region is not None:
        for nid, nd in nodes.items():
            if not region.contains(nd.location.x, nd.location.y):
                errors.append(f"nodes[{nid}]: outside the region of interest")
        for lid, ln in links.items():
            xy = ln.path.coords
            if not np.all(region.contains(xy[:, 0], xy[:, 1])):
                errors.append(f"links[{lid}].path: leaves the region of interest")

    routes: dict[str, Route] = {}
    for i, rd in enumerate(doc.get("routes", [])):
        where = f"routes[{i}]"
        try:
            route = Route(str(rd["name"]), str(rd["s"]), str(rd["t"]), tuple(str(x) for x in rd["links"]))
        except (KeyError, TypeError) as exc:
            errors.append(f"{where}: missing or malformed field {exc}")
            continue
        msg = _check_route(route, nodes, links)
        if msg:
            errors.append(f"{where}: {msg}")
        elif route.name in routes:
            errors.append(f"{where}.name: duplicate route name")
        else:
            routes[route.name] = route

    rings: dict[str, RingPair] = {}
    for i, rp in enumerate(doc.get("ring_pairs", [])):
        where = f"ring_pairs[{i}]"
        try:
            ring = RingPair(str(rp["name"]), str(rp["route1"]), str(rp["route2"]))
        except (KeyError, TypeError) as exc:
            errors.append(f"{where}: missing or malformed field {exc}")
            continue
        if ring.route1 not in routes or ring.route2 not in routes:
            errors.append(f"{where}: unknown route")
            continue
        msg = _check_ring(routes[ring.route1], routes[ring.route2], links)
        if msg:
            errors.append(f"{where}: {msg}")
        else:
            rings[ring.name] = ring

    if errors:
        raise ScenarioError(errors)
    return NetworkScenario(region, disaster, nodes, links, routes, rings)


def _walk(route: Route, links) -> list[str]:
    seq = [route.s]
    for lid in route.links:
        ln = links[lid]
        if seq[-1] == ln.source:
            seq.append(ln.target)
        elif seq[-1] == ln.target:
            seq.append(ln.source)
        else:
            raise ValueError(f"link {lid!r} does not continue from node {seq[-1]!r}")
    return seq


def _check_route(route: Route, nodes, links) -> str | None:
    if route.s not in nodes or route.t not in nodes:
        return "unknown end node"
    if not route.links:
        return "empty route"
    missing = [lid for lid in route.links if lid not in links]
    if missing:
        return f"unknown links {missing}"
    try:
        seq = _walk(route, links)
    except ValueError as exc:
        return f"not connected: {exc}"
    if seq[-1] != route.t:
        return f"ends at {seq[-1]!r}, not {route.t!r}"
    if len(set(seq)) != len(seq):
        return "route is not simple"
    return None


def _check_ring(r1: Route, r2: Route, links) -> str | None:
    if {r1.s, r1.t} != {r2.s, r2.t}:
        return "routes do not share both end nodes"
    inner1 = set(_walk(r1, links)[1:-1])
    inner2 = set(_walk(r2, links)[1:-1])
    shared = inner1 & inner2
    if shared:
        return f"routes share intermediate nodes {sorted(shared)}"
    if set(r1.links) & set(r2.links):
        return "routes share links"
    return None


def load_scenario(document) -> NetworkScenario:
    """Parse and validate a scenario from a path, a JSON string, or a dict."""
    if isinstance(document, Path) or (isinstance(document, str) and not document.lstrip().startswith("{")):
        text = Path(document).read_text()
    elif isinstance(document, str):
        text = document
    else:
        return _load_dict(document)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"<parse>: {exc}"]) from exc
    return _load_dict(doc)


def dump_scenario(sc: NetworkScenario) -> dict:
    """Emit a scenario as a plain document that :func:`load_scenario` accepts."""
    if sc.region.is_disk:
        c = sc.region.center
        region = {"disk": {"cx": c.x, "cy": c.y, "r": sc.region.radius}}
    else:
        region = {"polygon": [list(p) for p in sc.region.polygon.vertices]}
    d = sc.disaster
    if d.is_disk:
        disaster = {"disk": {"cx": d.reference.x, "cy": d.reference.y, "r": d.radius}}
    else:
        disaster = {"reference": list(d.reference), "parts": [[list(p) for p in part.vertices] for part in d.parts]}
    return {
        "region": region,
        "disaster": disaster,
        "nodes": [{"id": n.id, "x": n.location.x, "y": n.location.y, "alpha": n.alpha} for n in sc.nodes.values()],
        "links": [
            {"id": ln.id, "from": ln.source, "to": ln.target, "beta": ln.beta, "path": [list(p) for p in ln.path.vertices]}
            for ln in sc.links.values()
        ],
        "routes": [{"name": r.name, "s": r.s, "t": r.t, "links": list(r.links)} for r in sc.routes.values()],
        "ring_pairs": [{"name": r.name, "route1": r.route1, "route2": r.route2} for r in sc.ring_pairs.values()],
    }


# ---------------------------------------------------------------- metrics on the model


def mean_failure_count(route: Route | str, scenario: NetworkScenario) -> float:
    """Expected number of failures along a route: node alphas plus integrated link rates."""
    route = scenario.routes[route] if isinstance(route, str) else route
    alphas = sum(scenario.nodes[n].alpha for n in scenario.route_nodes(route))
    rates = sum(scenario.links[lid].beta * scenario.links[lid].length for lid in route.links)
    return float(alphas + rates)


def connected_after(s: str, t: str, scenario: NetworkScenario, draw: FailureDraw) -> bool:
    """Whether s still reaches t once failed nodes and faulted links are removed."""
    for n in (s, t):
        if n not in scenario.nodes:
            raise KeyError(f"unknown node {n!r}")
    if s in draw.failed_nodes or t in draw.failed_nodes:
        return False
    cut = draw.failed_links()
    g = nx.Graph()
    g.add_nodes_from(n for n in scenario.nodes if n not in draw.failed_nodes)
    for ln in scenario.links.values():
        if ln.id in cut or ln.source in draw.failed_nodes or ln.target in draw.failed_nodes:
            continue
        g.add_edge(ln.source, ln.target)
    return nx.has_path(g, s, t)

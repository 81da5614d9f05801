"""Survivability metrics: additive costs, disconnection probabilities and ring bounds.

Every disconnection formula here assumes the expected number of failures on
the routes involved is small; above ``WARN_GAMMA`` a warning is attached to the
result, above ``MAX_GAMMA`` an :class:`ApproximationError` is raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import ApproximationError, AssumptionViolated, ConvexityRequired
from .geometry import Polyline
from .measure import MeasureContext, prob_point_in, prob_segment_in, prob_segments_in, segment_intersect_measure
from .netmodel import NetworkScenario, Route, node_sort_key

PI = math.pi
WARN_GAMMA = 0.1
MAX_GAMMA = 0.5

GL_ORDER = 16
QUAD_RTOL = 1e-4
QUAD_MAX_PANELS = 256

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


@dataclass(frozen=True)
class MetricRecord:
    """One reported number with optional bounds, warnings and the inputs that produced it."""

    metric: str
    value: float
    lower: float | None = None
    upper: float | None = None
    warnings: tuple[str, ...] = ()
    params: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class RingAnalysis:
    lower_bound: float
    upper_bound: float
    exact_estimate: float
    approx_estimate: float
    terms: dict
    approx_terms: dict
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class CostField:
    """Cost density per km on links (``link_density`` overrides ``default_density``) and point costs on nodes."""

    link_density: dict = field(default_factory=dict)
    node_weights: dict = field(default_factory=dict)
    default_density: float = 1.0

    def __post_init__(self):
        vals = [self.default_density, *self.link_density.values(), *self.node_weights.values()]
        if any(v < 0 for v in vals):
            raise ValueError("cost weights must be non-negative")

    def density(self, link_id: str) -> float:
        return float(self.link_density.get(link_id, self.default_density))


def _regime(gamma: float) -> tuple[str, ...]:
    if gamma > MAX_GAMMA:
        raise ApproximationError(f"mean failure count {gamma:.4g} exceeds {MAX_GAMMA}; use the Monte Carlo estimator")
    if gamma > WARN_GAMMA:
        return (f"mean failure count {gamma:.4g} above {WARN_GAMMA}: small-failure approximation strained",)
    return ()


def _point_factor(ctx: MeasureContext) -> float:
    """2 pi ||D|| / omega, the chance a fixed point is covered (unclamped)."""
    return 2.0 * PI * ctx.disaster.area / ctx.omega


def _route(route, scenario):
    return scenario.routes[route] if isinstance(route, str) else route


# ---------------------------------------------------------------- additive cost


def total_weight(routes, cost: CostField, scenario: NetworkScenario | None = None) -> float:
    """Sum of costs along the union of ``routes`` (shared links and nodes counted once)."""
    if scenario is None:
        return float(sum(cost.default_density * r.length for r in routes))
    links: dict[str, None] = {}
    nodes: dict[str, None] = {}
    for r in routes:
        r = _route(r, scenario)
        links.update(dict.fromkeys(r.links))
        nodes.update(dict.fromkeys(scenario.route_nodes(r)))
    w = sum(cost.density(lid) * scenario.links[lid].length for lid in links)
    w += sum(cost.node_weights.get(n, 0.0) for n in nodes)
    return float(w)


def expected_additive_cost(routes, cost: CostField, ctx: MeasureContext,
                           scenario: NetworkScenario | None = None) -> MetricRecord:
    """Expected cost incurred inside the disaster area over the union of ``routes``.

    ``routes`` are Polylines (priced at ``cost.default_density``) or, with a
    scenario, route names / Route objects. Convexity is not needed, but a
    non-convex area needs ``ctx.omega_override``.
    """
    w1 = total_weight(routes, cost, scenario)
    value = _point_factor(ctx) * w1
    return MetricRecord("expected_additive_cost", value, params={"W1": w1, "omega": ctx.omega})


# ---------------------------------------------------------------- single route


def route_failure_count(route: Route | str, scenario: NetworkScenario) -> float:
    route = _route(route, scenario)
    nodes = scenario.route_nodes(route)
    return float(sum(scenario.nodes[n].alpha for n in nodes)
                 + sum(scenario.links[lid].beta * scenario.links[lid].length for lid in route.links))


def single_route_disconnect(route: Route | str, scenario: NetworkScenario, ctx: MeasureContext) -> MetricRecord:
    """Disconnection probability of the end nodes of a single route."""
    gamma = route_failure_count(route, scenario)
    warnings = _regime(gamma)
    value = ctx.clamp(_point_factor(ctx) * gamma, "single_route_disconnect")
    return MetricRecord("single_route_disconnect", value, warnings=warnings, params={"gamma": gamma})


def mean_disconnected_nodes(s: str, scenario: NetworkScenario, ctx: MeasureContext) -> MetricRecord:
    """Expected number of nodes cut off from ``s`` in a tree network."""
    g = nx.Graph(scenario.graph)
    if g.number_of_edges() != scenario.graph.number_of_edges() or not nx.is_forest(g):
        raise AssumptionViolated("mean disconnected count needs unique routes (a tree network)")
    if s not in g:
        raise KeyError(f"unknown node {s!r}")
    gammas = {}
    edge_link = {frozenset((ln.source, ln.target)): ln.id for ln in scenario.links.values()}
    for t, path in nx.single_source_shortest_path(g, s).items():
        if t == s:
            continue
        links = tuple(edge_link[frozenset(e)] for e in zip(path[:-1], path[1:]))
        gammas[t] = route_failure_count(Route(f"{s}-{t}", s, t, links), scenario)
    warnings = tuple(w for gm in gammas.values() for w in _regime(gm))
    value = _point_factor(ctx) * sum(gammas.values())
    return MetricRecord("mean_disconnected_nodes", value, warnings=tuple(dict.fromkeys(warnings)),
                        params={"s": s, "destinations": len(gammas)})


def tree_route(s: str, t: str, scenario: NetworkScenario) -> Route:
    """The unique s-t route of a tree network."""
    g = nx.Graph(scenario.graph)
    path = nx.shortest_path(g, s, t)
    edge_link = {frozenset((ln.source, ln.target)): ln.id for ln in scenario.links.values()}
    return Route(f"{s}-{t}", s, t, tuple(edge_link[frozenset(e)] for e in zip(path[:-1], path[1:])))


# ---------------------------------------------------------------- ring bounds


def ring_bounds(s, t, ctx: MeasureContext) -> tuple[float, float]:
    """Lower and upper bound on the chance that both routes of a ring through s, t are hit."""
    if not ctx.disaster.is_convex:
        raise ConvexityRequired("ring bounds need a convex disaster area")
    dist = math.dist(s, t)
    lower = 2.0 * prob_point_in(ctx) - prob_segment_in(s, t, ctx)
    upper = segment_intersect_measure(dist, ctx) / ctx.omega
    lower = ctx.clamp(lower, "ring_bounds.lower")
    upper = ctx.clamp(upper, "ring_bounds.upper")
    return lower, max(lower, upper)


# ---------------------------------------------------------------- ring disconnection


def _gl_points(path: Polyline, panels: int):
    """Quadrature nodes (K, 2) and weights (K,) for arc-length integrals over ``path``."""
    pts, wts = [], []
    xy = path.coords
    for a, b, seg in zip(xy[:-1], xy[1:], path.segment_lengths):
        edges = np.linspace(0.0, 1.0, panels + 1)
        h = np.diff(edges)
        t = (edges[:-1, None] + 0.5 * h[:, None] * (_GL_X[None, :] + 1.0)).ravel()
        w = (0.5 * h[:, None] * _GL_W[None, :]).ravel() * seg
        pts.append(a[None, :] + t[:, None] * (b - a)[None, :])
        wts.append(w)
    return np.concatenate(pts), np.concatenate(wts)


def _adaptive(fn):
    """Evaluate ``fn(panels)`` with panel doubling until the relative change is small."""
    panels = 1
    prev = fn(panels)
    while panels < QUAD_MAX_PANELS:
        panels *= 2
        cur = fn(panels)
        if abs(cur - prev) <= QUAD_RTOL * max(abs(cur), 1e-300):
            return cur
        prev = cur
    return prev


def w_point(path: Polyline, beta: float, v, ctx: MeasureContext) -> float:
    """Failure-rate-weighted covering integral between a point and a link path."""
    if beta == 0.0:
        return 0.0
    v = np.asarray(v, dtype=float)

    def integral(panels):
        pts, wts = _gl_points(path, panels)
        d = np.hypot(pts[:, 0] - v[0], pts[:, 1] - v[1])
        return float(wts @ prob_segments_in(d, ctx))

    return beta * _adaptive(integral)


def w_pair(path_i: Polyline, beta_i: float, path_j: Polyline, beta_j: float, ctx: MeasureContext) -> float:
    """Double covering integral between two link paths, weighted by both failure rates."""
    if beta_i == 0.0 or beta_j == 0.0:
        return 0.0

    def integral(panels):
        p, wp = _gl_points(path_i, panels)
        q, wq = _gl_points(path_j, panels)
        d = np.hypot(p[:, None, 0] - q[None, :, 0], p[:, None, 1] - q[None, :, 1])
        return float(wp @ prob_segments_in(d, ctx) @ wq)

    return beta_i * beta_j * _adaptive(integral)


def oriented_ring(ring, scenario: NetworkScenario):
    ring = scenario.ring_pairs[ring] if isinstance(ring, str) else ring
    r1, r2 = scenario.routes[ring.route1], scenario.routes[ring.route2]
    if r2.s != r1.s:
        # orient both routes from the same end node
        r2 = Route(r2.name, r2.t, r2.s, tuple(reversed(r2.links)))
    return r1, r2


def ring_failure_count(r1: Route, r2: Route, scenario: NetworkScenario) -> float:
    nodes = set(scenario.route_nodes(r1)) | set(scenario.route_nodes(r2))
    links = set(r1.links) | set(r2.links)
    return float(sum(scenario.nodes[n].alpha for n in nodes)
                 + sum(scenario.links[k].beta * scenario.links[k].length for k in links))


def _ring_terms(r1: Route, r2: Route, scenario: NetworkScenario, ctx: MeasureContext, approx: bool) -> dict:
    if not ctx.disaster.is_convex:
        raise ConvexityRequired("ring disconnection needs a convex disaster area")
    nodes, links = scenario.nodes, scenario.links
    s, t = r1.s, r1.t
    ps, pt = nodes[s].location, nodes[t].location

    def pseg(u, v):
        return float(prob_segment_in(u, v, ctx))

    point = _point_factor(ctx) if approx else prob_point_in(ctx)
    p1 = (nodes[s].alpha * point + nodes[t].alpha * point
          - nodes[s].alpha * nodes[t].alpha * pseg(ps, pt))

    inner1 = scenario.route_nodes(r1)[1:-1]
    inner2 = scenario.route_nodes(r2)[1:-1]
    nodes_nodes = sum(nodes[i].alpha * nodes[j].alpha * pseg(nodes[i].location, nodes[j].location)
                      for i in inner1 for j in inner2 if nodes[i].alpha and nodes[j].alpha)

    def w_i(lid, v):
        ln = links[lid]
        if approx:
            loc = nodes[v].location
            return ln.beta * ln.length * 0.5 * (pseg(loc, nodes[ln.source].location)
                                                 + pseg(loc, nodes[ln.target].location))
        return w_point(ln.path, ln.beta, nodes[v].location, ctx)

    node_link = 0.0
    for inner, other in ((inner1, r2), (inner2, r1)):
        for v in inner:
            if nodes[v].alpha:
                node_link += nodes[v].alpha * sum(w_i(lid, v) for lid in other.links)

    link_link = 0.0
    for i in r1.links:
        for j in r2.links:
            li, lj = links[i], links[j]
            if approx:
                ends_i = (nodes[li.source].location, nodes[li.target].location)
                ends_j = (nodes[lj.source].location, nodes[lj.target].location)
                pairs = sum(pseg(a, b) for a in ends_i for b in ends_j)
                link_link += li.beta * lj.beta / 4.0 * li.length * lj.length * pairs
            else:
                link_link += w_pair(li.path, li.beta, lj.path, lj.beta, ctx)

    return {"P1": p1, "node_node": nodes_nodes, "node_link": node_link, "link_link": link_link,
            "P2": nodes_nodes + node_link + link_link}


def ring_disconnect_exact(ring, scenario: NetworkScenario, ctx: MeasureContext) -> MetricRecord:
    """Ring disconnection probability with the covering integrals evaluated by quadrature."""
    r1, r2 = oriented_ring(ring, scenario)
    gamma = ring_failure_count(r1, r2, scenario)
    warnings = _regime(gamma)
    terms = _ring_terms(r1, r2, scenario, ctx, approx=False)
    value = ctx.clamp(terms["P1"] + terms["P2"], "ring_disconnect_exact")
    return MetricRecord("ring_disconnect_exact", value, warnings=warnings, params={"gamma": gamma, **terms})


def ring_disconnect_approx(ring, scenario: NetworkScenario, ctx: MeasureContext) -> MetricRecord:
    """Ring disconnection probability with each covering integral replaced by link-endpoint averages."""
    r1, r2 = oriented_ring(ring, scenario)
    gamma = ring_failure_count(r1, r2, scenario)
    warnings = _regime(gamma)
    terms = _ring_terms(r1, r2, scenario, ctx, approx=True)
    value = ctx.clamp(terms["P1"] + terms["P2"], "ring_disconnect_approx")
    return MetricRecord("ring_disconnect_approx", value, warnings=warnings, params={"gamma": gamma, **terms})


def analyze_ring(ring, scenario: NetworkScenario, ctx: MeasureContext) -> RingAnalysis:
    r1, r2 = oriented_ring(ring, scenario)
    exact = ring_disconnect_exact(ring, scenario, ctx)
    approx = ring_disconnect_approx(ring, scenario, ctx)
    lo, hi = ring_bounds(scenario.nodes[r1.s].location, scenario.nodes[r1.t].location, ctx)
    keys = ("P1", "node_node", "node_link", "link_link", "P2")
    return RingAnalysis(lo, hi, exact.value, approx.value,
                        {k: exact.params[k] for k in keys}, {k: approx.params[k] for k in keys},
                        exact.warnings)


# ---------------------------------------------------------------- pairwise tables


def ring_routes(s: str, t: str, scenario: NetworkScenario) -> tuple[Route, Route]:
    """The two s-t routes of a network whose graph is a single cycle."""
    g = nx.Graph(scenario.graph)
    cycle = [u for u, _ in nx.find_cycle(g, source=s)]
    k = cycle.index(t)
    edge_link = {frozenset((ln.source, ln.target)): ln.id for ln in scenario.links.values()}
    fwd = cycle[: k + 1]
    back = [s] + cycle[k:][::-1]
    mk = lambda name, p: Route(name, s, t, tuple(edge_link[frozenset(e)] for e in zip(p[:-1], p[1:])))
    return mk("cw", fwd), mk("ccw", back)


def topology(scenario: NetworkScenario) -> str:
    """``tree``, ``ring`` (a single cycle) or ``general``."""
    g = nx.Graph(scenario.graph)
    if g.number_of_edges() != scenario.graph.number_of_edges() or not nx.is_connected(g):
        return "general"
    if nx.is_tree(g):
        return "tree"
    if all(d == 2 for _, d in g.degree()):
        return "ring"
    return "general"


def pair_disconnect(s: str, t: str, scenario: NetworkScenario, ctx: MeasureContext, approx: bool = False) -> float:
    """Closed-form disconnection probability for a pair in a tree or ring network."""
    kind = topology(scenario)
    if kind == "tree":
        return single_route_disconnect(tree_route(s, t, scenario), scenario, ctx).value
    if kind == "ring":
        r1, r2 = ring_routes(s, t, scenario)
        _regime(ring_failure_count(r1, r2, scenario))
        terms = _ring_terms(r1, r2, scenario, ctx, approx=approx)
        return ctx.clamp(terms["P1"] + terms["P2"], "pair_disconnect")
    raise AssumptionViolated("closed forms cover tree and ring networks only; use the Monte Carlo estimator")


def sorted_nodes(scenario: NetworkScenario) -> list[str]:
    return sorted(scenario.nodes, key=node_sort_key)

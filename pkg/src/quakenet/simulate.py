"""Seeded Monte Carlo estimates over uniformly placed disaster areas.

Poses are proposed uniformly on the bounding box of the region of interest
inflated by a margin, with a uniform direction, and kept when the placed area
touches the region. ``samples`` counts proposals; estimates average over the
accepted poses, so every probability is conditional on the disaster touching
the region.

Proposals are generated in fixed blocks of ``block`` poses. Block ``k`` draws
its poses from ``default_rng([seed, k])`` and its failure uniforms from
``default_rng([seed, k, 1])``, so results depend only on the seed and sample
count, never on how blocks are spread over workers. Two estimates with the
same seed see the same poses and the same failure uniforms (common random
numbers), which makes paired comparisons low-noise and failures monotone in
the failure rates.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import ConvexRegion, DisasterArea, Polyline, Pose, clip_intervals, contains_point, place
from .kernels import DiskShape, to_global, to_local
from .netmodel import FailureDraw, NetworkScenario, node_sort_key

TWO_PI = 2.0 * math.pi
BLOCK = 16384


@dataclass(frozen=True)
class SamplerConfig:
    seed: int = 42
    samples: int = 10_000
    workers: int = 1
    margin: float | None = None
    block: int = BLOCK

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if self.samples < 1:
            raise DomainError("samples must be positive")
        if self.workers < 1:
            raise DomainError("workers must be positive")
        if self.block < 1:
            raise DomainError("block must be positive")


@dataclass(frozen=True)
class EstimatorResult:
    estimate: float
    stderr: float
    samples_used: int
    accepted: int
    seed: int


# ---------------------------------------------------------------- pose sampling


class PoseSampler:
    """Rejection sampler for poses whose placed disaster area meets the region."""

    def __init__(self, disaster: DisasterArea, region: ConvexRegion, cfg: SamplerConfig):
        self.disaster = disaster
        self.region = region
        self.cfg = cfg
        need = max(disaster.diameter, disaster.reach)
        if cfg.margin is not None and cfg.margin < need - 1e-12:
            raise DomainError(f"margin must be at least {need:.6g} km")
        self.margin = need if cfg.margin is None else float(cfg.margin)
        x0, y0, x1, y1 = region.bbox
        m = self.margin
        self.box = (x0 - m, y0 - m, x1 + m, y1 + m)
        self.box_measure = (x1 - x0 + 2 * m) * (y1 - y0 + 2 * m) * TWO_PI
        self.shape = disaster.shape
        self.ref = disaster.reference
        # one vertex per part catches parts lying wholly inside the region
        self._outline = np.array([p.coords[0] for p in disaster.parts])
        if not region.is_disk:
            self._edges = region.edges()

    def propose(self, rng: np.random.Generator, n: int):
        x0, y0, x1, y1 = self.box
        x = rng.uniform(x0, x1, n)
        y = rng.uniform(y0, y1, n)
        th = rng.uniform(0.0, TWO_PI, n)
        return x, y, th

    def touches(self, x, y, th) -> np.ndarray:
        """Whether the area placed at each pose meets the region (closed sets)."""
        reg, shape, ref = self.region, self.shape, self.ref
        if reg.is_disk:
            lx, ly = to_local([reg.center], x, y, th, ref)
            lx, ly = lx[:, 0], ly[:, 0]
            if isinstance(shape, DiskShape):
                return np.hypot(lx - ref.x, ly - ref.y) <= shape.radius + reg.radius + 1e-9
            out = np.hypot(lx - ref.x, ly - ref.y) <= self.disaster.reach + reg.radius + 1e-9
            idx = np.flatnonzero(out)
            if idx.size:
                px, py = lx[idx], ly[idx]
                out[idx] = shape.contains(px, py) | (shape.boundary_distance(px, py) <= reg.radius + 1e-9)
            return out
        e = self._edges
        ax, ay = to_local(e[:, :2], x, y, th, ref)
        bx, by = to_local(e[:, 2:], x, y, th, ref)
        hit = shape.hits(ax, ay, bx, by).any(axis=1)
        if isinstance(shape, DiskShape):
            return hit | reg.contains(x, y)
        gx, gy = to_global(self._outline, x, y, th, ref)
        return hit | reg.contains(gx, gy).any(axis=1)

    def sample(self, rng: np.random.Generator) -> Pose:
        while True:
            x, y, th = self.propose(rng, 64)
            ok = np.flatnonzero(self.touches(x, y, th))
            if ok.size:
                i = ok[0]
                return Pose(float(x[i]), float(y[i]), float(th[i]))

    def run(self, fn):
        """Apply ``fn(x, y, theta, rng)`` to the accepted poses of every block.

        Returns the number of accepted poses and the per-pose values
        concatenated in block order.
        """
        cfg = self.cfg
        n_blocks = -(-cfg.samples // cfg.block)

        def work(k):
            n = min(cfg.block, cfg.samples - k * cfg.block)
            x, y, th = self.propose(np.random.default_rng([cfg.seed, k]), n)
            ok = self.touches(x, y, th)
            frng = np.random.default_rng([cfg.seed, k, 1])
            return fn(x[ok], y[ok], th[ok], frng)

        if cfg.workers == 1 or n_blocks == 1:
            parts = [work(k) for k in range(n_blocks)]
        else:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                parts = list(pool.map(work, range(n_blocks)))
        values = np.concatenate(parts, axis=0)
        return values.shape[0], values


def sample_pose(disaster: DisasterArea, region: ConvexRegion, rng: np.random.Generator) -> Pose:
    """One pose uniform over the poses that bring ``disaster`` into contact with ``region``."""
    return PoseSampler(disaster, region, SamplerConfig()).sample(rng)


def _result(values, accepted, cfg, binary=True) -> EstimatorResult:
    if accepted == 0:
        return EstimatorResult(0.0, 0.0, cfg.samples, 0, cfg.seed)
    mean = float(np.mean(values))
    if binary:
        err = math.sqrt(max(mean * (1.0 - mean), 0.0) / accepted)
    else:
        err = float(np.std(values, ddof=1) / math.sqrt(accepted)) if accepted > 1 else 0.0
    return EstimatorResult(mean, err, cfg.samples, accepted, cfg.seed)


def _results(values, accepted, cfg, binary=True) -> list[EstimatorResult]:
    values = np.asarray(values)
    if values.ndim == 1:
        values = values[:, None]
    return [_result(values[:, j], accepted, cfg, binary) for j in range(values.shape[1])]


def estimate_omega(disaster: DisasterArea, region: ConvexRegion, cfg: SamplerConfig) -> EstimatorResult:
    """Measure of the poses meeting the region: box measure times the acceptance ratio."""
    ps = PoseSampler(disaster, region, cfg)
    accepted, _ = ps.run(lambda x, y, th, rng: np.empty((x.size, 0)))
    p = accepted / cfg.samples
    err = math.sqrt(p * (1.0 - p) / cfg.samples)
    return EstimatorResult(ps.box_measure * p, ps.box_measure * err, cfg.samples, accepted, cfg.seed)


# ---------------------------------------------------------------- scene evaluation


def _segments(paths) -> tuple[np.ndarray, np.ndarray]:
    """Stack the segments of ``paths`` into (M, 4) with the owning path index."""
    segs, owner = [], []
    for k, path in enumerate(paths):
        xy = path.coords
        segs.append(np.hstack([xy[:-1], xy[1:]]))
        owner.append(np.full(len(xy) - 1, k))
    return np.concatenate(segs), np.concatenate(owner)


def _local(seg, x, y, th, ref):
    ax, ay = to_local(seg[:, :2], x, y, th, ref)
    bx, by = to_local(seg[:, 2:], x, y, th, ref)
    return ax, ay, bx, by


def _per_owner(values, owner, n):
    """Reduce (P, M) segment values to (P, n) per-owner sums."""
    onehot = np.zeros((owner.size, n))
    onehot[np.arange(owner.size), owner] = 1.0
    return values @ onehot


class _Scene:
    """Scenario geometry flattened for batched evaluation."""

    def __init__(self, scenario: NetworkScenario):
        self.scenario = scenario
        self.node_ids = sorted(scenario.nodes, key=node_sort_key)
        self.node_index = {n: i for i, n in enumerate(self.node_ids)}
        self.link_ids = list(scenario.links)
        self.link_index = {lid: i for i, lid in enumerate(self.link_ids)}
        links = [scenario.links[lid] for lid in self.link_ids]
        self.seg, self.owner = _segments([ln.path for ln in links])
        self.nodes_xy = np.array([scenario.nodes[n].location for n in self.node_ids], dtype=float)
        self.alpha = np.array([scenario.nodes[n].alpha for n in self.node_ids])
        self.beta = np.array([ln.beta for ln in links])
        self.ends = np.array([(self.node_index[ln.source], self.node_index[ln.target]) for ln in links], dtype=int)

    def state(self, shape, ref, x, y, th):
        """Node coverage (P, N) and clipped link length (P, K) at every pose."""
        nx_, ny_ = to_local(self.nodes_xy, x, y, th, ref)
        covered = shape.contains(nx_, ny_).reshape(nx_.shape)
        clip = shape.clip(*_local(self.seg, x, y, th, ref)).reshape(x.size, -1)
        return covered, _per_owner(clip, self.owner, len(self.link_ids))

    def uniforms(self, rng, n):
        """Failure uniforms for nodes and links, drawn in a fixed layout."""
        return rng.random((n, len(self.node_ids))), rng.random((n, len(self.link_ids)))

    def failures(self, covered, clip, un, ul, beta=None):
        beta = self.beta if beta is None else beta
        node_down = covered & (un < self.alpha)
        link_down = ul < -np.expm1(-beta * clip)
        return node_down, link_down

    def reach(self, src: int, node_down, link_down):
        """Nodes reachable from ``src`` at every pose (label propagation)."""
        up = ~node_down
        reach = np.zeros_like(up)
        reach[:, src] = up[:, src]
        live = ~link_down
        a, b = self.ends[:, 0], self.ends[:, 1]
        while True:
            before = reach.copy()
            for k in range(len(a)):
                m = live[:, k]
                reach[:, b[k]] |= reach[:, a[k]] & m & up[:, b[k]]
                reach[:, a[k]] |= reach[:, b[k]] & m & up[:, a[k]]
            if np.array_equal(before, reach):
                return reach


# ---------------------------------------------------------------- estimators


def estimate_intersect_prob(route: Polyline, disaster: DisasterArea, region: ConvexRegion,
                            cfg: SamplerConfig) -> EstimatorResult:
    """Chance that the placed area meets ``route``."""
    return estimate_all_intersect([route], disaster, region, cfg)


def estimate_all_intersect(routes, disaster: DisasterArea, region: ConvexRegion,
                           cfg: SamplerConfig) -> EstimatorResult:
    """Chance that the placed area meets every route in ``routes``."""
    return estimate_intersect_events([routes], disaster, region, cfg)[0]


def estimate_intersect_events(families, disaster: DisasterArea, region: ConvexRegion,
                              cfg: SamplerConfig) -> list[EstimatorResult]:
    """One all-routes-hit estimate per family of routes, all on the same poses."""
    families = [list(f) for f in families]
    flat = [r for f in families for r in f]
    seg, owner = _segments(flat)
    shape, ref = disaster.shape, disaster.reference
    bounds = np.cumsum([0] + [len(f) for f in families])

    def fn(x, y, th, rng):
        hit = shape.hits(*_local(seg, x, y, th, ref)).reshape(x.size, -1)
        per_route = _per_owner(hit.astype(float), owner, len(flat)) > 0
        return np.column_stack([per_route[:, a:b].all(axis=1) for a, b in zip(bounds[:-1], bounds[1:])])

    accepted, values = PoseSampler(disaster, region, cfg).run(fn)
    return _results(values, accepted, cfg)


def estimate_segment_in(u, v, disaster: DisasterArea, region: ConvexRegion, cfg: SamplerConfig) -> EstimatorResult:
    """Chance that the placed area covers the whole segment uv."""
    shape, ref = disaster.shape, disaster.reference
    seg = np.array([[u[0], u[1], v[0], v[1]]], dtype=float)

    def fn(x, y, th, rng):
        ax, ay, bx, by = _local(seg, x, y, th, ref)
        if math.dist(u, v) == 0.0:
            return shape.contains(ax, ay)[:, 0]
        return shape.covers(ax, ay, bx, by)[:, 0]

    accepted, values = PoseSampler(disaster, region, cfg).run(fn)
    return _result(values, accepted, cfg)


def estimate_expected_cost(paths, disaster: DisasterArea, region: ConvexRegion, cfg: SamplerConfig,
                           densities=None) -> EstimatorResult:
    """Expected cost inside the placed area: sum of density times clipped length."""
    paths = list(paths)
    dens = np.ones(len(paths)) if densities is None else np.asarray(densities, dtype=float)
    seg, owner = _segments(paths)
    shape, ref = disaster.shape, disaster.reference

    def fn(x, y, th, rng):
        clip = shape.clip(*_local(seg, x, y, th, ref)).reshape(x.size, -1)
        return _per_owner(clip, owner, len(paths)) @ dens

    accepted, values = PoseSampler(disaster, region, cfg).run(fn)
    return _result(values, accepted, cfg, binary=False)


def draw_failures(scenario: NetworkScenario, pose: Pose, rng: np.random.Generator, draws: int | None = None):
    """Failures under one pose: covered nodes fail with their alpha, link faults
    form a Poisson process of rate beta on the covered part of each link.

    With ``draws`` set, returns that many independent draws for the same pose.
    """
    placed = place(scenario.disaster, pose)
    order = sorted(scenario.nodes, key=node_sort_key)
    exposed = [(nid, scenario.nodes[nid].alpha) for nid in order
               if contains_point(placed, scenario.nodes[nid].location)]
    spans = {}
    for lid, ln in scenario.links.items():
        iv = clip_intervals(ln.path, placed) if ln.beta > 0 else []
        starts = np.array([a for a, _ in iv])
        cum = np.concatenate([[0.0], np.cumsum([b - a for a, b in iv])])
        spans[lid] = (ln.beta, starts, cum)

    def one():
        failed = frozenset(nid for nid, alpha in exposed if rng.random() < alpha)
        points = {}
        for lid, (beta, starts, cum) in spans.items():
            covered = cum[-1]
            count = rng.poisson(beta * covered) if covered > 0 else 0
            if count:
                offs = np.sort(rng.uniform(0.0, covered, count))
                idx = np.clip(np.searchsorted(cum, offs, side="right") - 1, 0, len(starts) - 1)
                points[lid] = tuple(float(p) for p in starts[idx] + offs - cum[idx])
            else:
                points[lid] = ()
        return FailureDraw(failed, points)

    return one() if draws is None else [one() for _ in range(draws)]


def _disconnect_fn(scenario, pairs, betas):
    scene = _Scene(scenario)
    shape, ref = scenario.disaster.shape, scenario.disaster.reference
    beta_rows = [scene.beta if b is None else _beta_vector(scene, b) for b in betas]
    sources = sorted({scene.node_index[s] for s, _ in pairs})

    def fn(x, y, th, rng):
        covered, clip = scene.state(shape, ref, x, y, th)
        un, ul = scene.uniforms(rng, x.size)
        cols = []
        for beta in beta_rows:
            node_down, link_down = scene.failures(covered, clip, un, ul, beta)
            reach = {s: scene.reach(s, node_down, link_down) for s in sources}
            for s, t in pairs:
                cols.append(~reach[scene.node_index[s]][:, scene.node_index[t]])
        return np.column_stack(cols) if cols else np.empty((x.size, 0), dtype=bool)

    return fn


def _beta_vector(scene, betas):
    if isinstance(betas, (int, float)):
        return np.full(len(scene.link_ids), float(betas))
    return np.array([float(betas.get(lid, b)) for lid, b in zip(scene.link_ids, scene.beta)])


def estimate_disconnect(s: str, t: str, scenario: NetworkScenario, cfg: SamplerConfig,
                        links=None) -> EstimatorResult:
    """Chance that s and t are disconnected; ``links`` restricts the network to a subset."""
    return estimate_disconnect_sweep(s, t, scenario, cfg, [None], links)[0]


def estimate_disconnect_sweep(s: str, t: str, scenario: NetworkScenario, cfg: SamplerConfig,
                              betas, links=None) -> list[EstimatorResult]:
    """Disconnect estimates for several failure-rate settings on shared poses and uniforms.

    Each entry of ``betas`` is None (the scenario's rates), one rate for every
    link, or a mapping from link id to rate.
    """
    sc = scenario if links is None else scenario.restricted(links)
    for n in (s, t):
        if n not in sc.nodes:
            raise KeyError(f"unknown node {n!r}")
    fn = _disconnect_fn(sc, [(s, t)], list(betas))
    accepted, values = PoseSampler(sc.disaster, sc.region, cfg).run(fn)
    return _results(values, accepted, cfg)


def estimate_disconnect_matrix(scenario: NetworkScenario, cfg: SamplerConfig, betas=None):
    """All-pairs disconnect estimates on one pose stream.

    Returns node ids, estimates (N, N) and standard errors (N, N).
    """
    ids = sorted(scenario.nodes, key=node_sort_key)
    pairs = [(a, b) for a in ids for b in ids if a != b]
    fn = _disconnect_fn(scenario, pairs, [betas])
    accepted, values = PoseSampler(scenario.disaster, scenario.region, cfg).run(fn)
    res = _results(values, accepted, cfg)
    est = np.zeros((len(ids), len(ids)))
    err = np.zeros_like(est)
    index = {n: i for i, n in enumerate(ids)}
    for (a, b), r in zip(pairs, res):
        est[index[a], index[b]] = r.estimate
        err[index[a], index[b]] = r.stderr
    return ids, est, err


def inclusion_measure_table(disaster: DisasterArea, dists, samples: int = 200_000, seed: int = 42):
    """Monte Carlo covering measure h(d) of a segment of length d, as an interpolating callable.

    A segment centred at the origin is tested against poses whose reference
    point is uniform on a disk of radius ``reach + d/2``; the measure is the
    hit fraction times that disk's area times 2 pi.
    """
    dists = np.sort(np.asarray(dists, dtype=float))
    shape, ref = disaster.shape, disaster.reference
    rng = np.random.default_rng([seed, 2])
    values = []
    for d in dists:
        rad = disaster.reach + 0.5 * d
        r = rad * np.sqrt(rng.random(samples))
        phi = rng.uniform(0.0, TWO_PI, samples)
        th = rng.uniform(0.0, TWO_PI, samples)
        x, y = r * np.cos(phi), r * np.sin(phi)
        seg = np.array([[-0.5 * d, 0.0, 0.5 * d, 0.0]])
        ax, ay, bx, by = _local(seg, x, y, th, ref)
        hit = shape.covers(ax, ay, bx, by) if d > 0 else shape.contains(ax, ay)
        values.append(float(np.mean(hit)) * math.pi * rad * rad * TWO_PI)
    values = np.asarray(values)

    def h(dist):
        out = np.interp(np.asarray(dist, dtype=float), dists, values, right=0.0)
        return float(out) if np.ndim(out) == 0 else out

    return h

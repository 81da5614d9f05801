"""Kinematic measures of disaster poses and the probabilities built on them.

A probability is the measure of the poses satisfying an event divided by the
measure ``omega`` of all poses for which the disaster touches the region of
interest. Measures are in km^2 * rad.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import shapely

from .errors import AssumptionViolated, ConvexityRequired, DomainError
from .geometry import ConvexRegion, DisasterArea, Polyline
from .kernels import segment_segment_distance

PI = math.pi
PHI_MIN = 1e-6
SURROGATE_MODES = ("auto", "disk-perimeter", "disk-area")


def _require_convex(d: DisasterArea) -> None:
    if not d.is_convex:
        raise ConvexityRequired("closed-form measure needs a convex single-part disaster area")


def omega_measure(d: DisasterArea, a0: ConvexRegion) -> float:
    """Measure of the poses that bring ``d`` into contact with ``a0``."""
    _require_convex(d)
    return 2.0 * PI * (d.area + a0.area) + d.perimeter * a0.perimeter


@dataclass(frozen=True)
class SurrogateShape:
    """Disk or rectangle standing in for the disaster area in segment-inclusion terms."""

    kind: str
    radius: float = 0.0
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind == "disk":
            if not self.radius > 0:
                raise DomainError("surrogate disk radius must be positive")
        elif self.kind == "rectangle":
            if not 0 < self.a <= self.b:
                raise DomainError("surrogate rectangle needs 0 < a <= b")
        else:
            raise DomainError(f"unknown surrogate kind {self.kind!r}")

    @property
    def diameter(self) -> float:
        if self.kind == "disk":
            return 2.0 * self.radius
        return math.hypot(self.a, self.b)

    def measure(self, dist):
        """Measure of poses for which a segment of length ``dist`` is covered."""
        if self.kind == "disk":
            return g1(dist, self.radius)
        return g2(dist, self.a, self.b)


def g1(dist, r_d):
    """Covering measure of a segment of length ``dist`` by a disk of radius ``r_d``."""
    d = np.asarray(dist, dtype=float)
    q = np.clip(d / (2.0 * r_d), 0.0, 1.0)
    val = 4.0 * PI * (r_d ** 2 * np.arccos(q) - 0.5 * d * r_d * np.sqrt(1.0 - q * q))
    val = np.where(d < 2.0 * r_d, np.maximum(val, 0.0), 0.0)
    return float(val) if val.ndim == 0 else val


def g2(dist, a_d, b_d):
    """Covering measure of a segment of length ``dist`` by an ``a_d`` x ``b_d`` rectangle."""
    if not 0 < a_d <= b_d:
        raise DomainError("g2 needs 0 < a_d <= b_d")
    d = np.asarray(dist, dtype=float)
    a, b = a_d, b_d
    diag = math.hypot(a, b)
    ds = np.maximum(d, 1e-300)
    acos_a = np.arccos(np.clip(a / ds, -1.0, 1.0))
    acos_b = np.arccos(np.clip(b / ds, -1.0, 1.0))
    root_a = np.sqrt(np.maximum(d * d - a * a, 0.0))
    root_b = np.sqrt(np.maximum(d * d - b * b, 0.0))
    short = 2.0 * PI * a * b + 2.0 * d * d - 4.0 * d * (a + b)
    middle = 4.0 * a * b * (PI / 2.0 - acos_a) - 4.0 * d * b + 4.0 * b * root_a - 2.0 * a * a
    long = (
        4.0 * a * b * (PI / 2.0 - acos_b - acos_a)
        + 4.0 * a * root_b + 4.0 * b * root_a
        - 2.0 * b * b - 2.0 * a * a - 2.0 * d * d
    )
    val = np.select([d <= a, d <= b, d <= diag], [short, middle, long], 0.0)
    val = np.maximum(val, 0.0)
    return float(val) if val.ndim == 0 else val


def surrogate_for(d: DisasterArea, mode: str = "auto") -> SurrogateShape:
    """Pick the disk or rectangle matching ``d``'s perimeter and area.

    ``auto`` uses a perimeter/area-matched rectangle when one exists
    (perimeter^2 >= 16 area), else a disk of equal perimeter. The two
    ``disk-*`` modes force a disk matched on perimeter or on area.
    """
    p, a = d.perimeter, d.area
    if mode == "disk-perimeter":
        return SurrogateShape("disk", radius=p / (2.0 * PI))
    if mode == "disk-area":
        return SurrogateShape("disk", radius=math.sqrt(a / PI))
    if mode != "auto":
        raise DomainError(f"unknown surrogate mode {mode!r}")
    disc = p * p - 16.0 * a
    if disc >= -1e-12 * p * p:
        root = math.sqrt(max(disc, 0.0))
        return SurrogateShape("rectangle", a=(p - root) / 4.0, b=(p + root) / 4.0)
    return SurrogateShape("disk", radius=p / (2.0 * PI))


@dataclass(frozen=True, eq=False)
class MeasureContext:
    """Disaster area and region of interest, with the settings every formula shares.

    ``omega`` may be supplied directly (for example an empirical value from the
    sampler), which lets non-convex areas reach formulas that do not otherwise
    need convexity. ``inclusion`` replaces the surrogate segment-covering measure
    with another callable of segment length.
    """

    disaster: DisasterArea
    region: ConvexRegion
    theta_steps: int = 720
    surrogate: str = "auto"
    omega_override: float | None = None
    inclusion: Callable | None = None
    clamps: Counter = field(default_factory=Counter, compare=False)

    def __post_init__(self):
        if self.theta_steps < 8:
            raise DomainError("theta_steps must be at least 8")
        if self.surrogate not in SURROGATE_MODES:
            raise DomainError(f"surrogate must be one of {SURROGATE_MODES}")
        if self.omega_override is not None and not self.omega_override > 0:
            raise DomainError("omega must be positive")

    @property
    def omega(self) -> float:
        if self.omega_override is not None:
            return float(self.omega_override)
        return omega_measure(self.disaster, self.region)

    @property
    def surrogate_shape(self) -> SurrogateShape:
        return surrogate_for(self.disaster, self.surrogate)

    def segment_measure(self, dist):
        if self.inclusion is not None:
            return self.inclusion(dist)
        return self.surrogate_shape.measure(dist)

    def clamp(self, value, name: str):
        """Clip to [0, 1], counting every clipped value under ``name``."""
        arr = np.asarray(value, dtype=float)
        bad = int(np.count_nonzero((arr < 0.0) | (arr > 1.0)))
        if bad:
            self.clamps[name] += bad
        out = np.clip(arr, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out


def f_disk(phi: float, r_d: float) -> float:
    """Measure lost at a route joint of inner angle ``phi`` for a disk of radius ``r_d``."""
    if not PHI_MIN <= phi <= PI + 1e-12:
        raise DomainError(f"inner angle must lie in [{PHI_MIN}, pi], got {phi}")
    if phi >= PI:
        return 0.0
    return max(0.0, -PI * (PI - phi) * r_d ** 2 + 2.0 * PI * r_d ** 2 / math.tan(phi / 2.0))


def validate_separation(route: Polyline, d) -> bool:
    """Check that non-adjacent pieces of ``route`` are farther apart than ``d_max``.

    The route's two end points count as extra pieces before the first and after
    the last segment. ``d`` is a DisasterArea or a diameter in km.
    """
    d_max = d.diameter if isinstance(d, DisasterArea) else float(d)
    xy = route.coords
    n = len(xy) - 1
    if n == 1:
        return True
    # piece k in 0..n+1: 0 and n+1 are the end points, k in 1..n is segment k
    a = np.vstack([xy[:1], xy[:-1], xy[-1:]])
    b = np.vstack([xy[:1], xy[1:], xy[-1:]])
    i, j = np.triu_indices(n + 2, k=2)
    dist = segment_segment_distance(a[i, 0], a[i, 1], b[i, 0], b[i, 1], a[j, 0], a[j, 1], b[j, 0], b[j, 1])
    return bool(np.all(dist > d_max))


def lemma2_closed_form(route: Polyline, r_d: float | None = None, ctx: MeasureContext | None = None) -> float:
    """Measure of disk poses meeting a well-separated polyline route.

    Straight-line contribution minus one joint penalty per interior vertex.
    ``r_d`` defaults to the radius of ``ctx``'s disk disaster area.
    """
    if r_d is None:
        if ctx is None or not ctx.disaster.is_disk:
            raise DomainError("a disk radius is required")
        r_d = ctx.disaster.radius
    if not validate_separation(route, 2.0 * r_d):
        raise AssumptionViolated("route segments closer than the disaster diameter")
    base = 4.0 * PI * route.length * r_d + 2.0 * PI ** 2 * r_d ** 2
    return base - sum(f_disk(float(phi), r_d) for phi in route.angles)


def _route_sum_area(route: Polyline, d: DisasterArea, theta: float) -> float:
    """Area of reference points whose placement at angle ``theta`` meets ``route``."""
    c, s = math.cos(theta), math.sin(theta)
    xy = d.parts[0].coords - np.asarray(d.reference)
    # reflected, rotated disaster polygon
    q = -np.column_stack([c * xy[:, 0] - s * xy[:, 1], s * xy[:, 0] + c * xy[:, 1]])
    r = route.coords
    pts = np.concatenate([q[None, :, :] + r[:-1, None, :], q[None, :, :] + r[1:, None, :]], axis=1)
    hulls = shapely.convex_hull(shapely.multipoints(pts))
    return float(shapely.area(shapely.union_all(hulls)))


def pose_set_measure_route(route: Polyline, ctx: MeasureContext) -> float:
    """Numerical measure of the poses whose disaster area meets ``route``.

    For each direction on a uniform grid the admissible reference points form
    the Minkowski sum of the route with the reflected, rotated area; its area is
    integrated over direction with the (periodic) trapezoid rule. A disk area
    makes every direction identical.
    """
    d = ctx.disaster
    _require_convex(d)
    if d.is_disk:
        line = shapely.LineString(route.coords)
        return 2.0 * PI * float(line.buffer(d.radius, quad_segs=1024).area)
    thetas = 2.0 * PI * np.arange(ctx.theta_steps) / ctx.theta_steps
    areas = [_route_sum_area(route, d, t) for t in thetas]
    return 2.0 * PI * float(np.mean(areas))


def _check_in_region(ctx: MeasureContext, xy: np.ndarray) -> None:
    if not np.all(ctx.region.contains(xy[:, 0], xy[:, 1])):
        raise DomainError("geometry must lie inside the region of interest")


def route_measure(route: Polyline, ctx: MeasureContext, method: str = "auto") -> float:
    """Measure of poses meeting ``route``.

    ``auto`` uses an exact closed form when one applies (a single segment, or a
    disk area with well-separated segments) and the numerical integrator
    otherwise; ``numeric`` and ``closed`` force one path.
    """
    d = ctx.disaster
    _require_convex(d)
    if method not in ("auto", "numeric", "closed"):
        raise DomainError(f"unknown method {method!r}")
    if method != "numeric":
        if len(route.coords) == 2:
            return segment_intersect_measure(route.length, ctx)
        if d.is_disk and validate_separation(route, d.diameter):
            return lemma2_closed_form(route, d.radius)
        if method == "closed":
            raise AssumptionViolated("no closed form for this route and disaster area")
    return pose_set_measure_route(route, ctx)


def prob_route_intersect(route: Polyline, ctx: MeasureContext, method: str = "auto") -> float:
    _check_in_region(ctx, route.coords)
    return ctx.clamp(route_measure(route, ctx, method) / ctx.omega, "prob_route_intersect")


def prob_point_in(ctx: MeasureContext) -> float:
    """Probability that a fixed point of the region is covered."""
    return ctx.clamp(2.0 * PI * ctx.disaster.area / ctx.omega, "prob_point_in")


def prob_segment_in(u, v, ctx: MeasureContext):
    """Probability that the whole segment uv is covered (surrogate approximation)."""
    dist = math.dist(u, v)
    return ctx.clamp(ctx.segment_measure(dist) / ctx.omega, "prob_segment_in")


def prob_segments_in(dist, ctx: MeasureContext):
    """Vectorised :func:`prob_segment_in` over segment lengths."""
    return ctx.clamp(np.asarray(ctx.segment_measure(np.asarray(dist, dtype=float))) / ctx.omega, "prob_segment_in")


def segment_intersect_measure(length: float, ctx: MeasureContext) -> float:
    """Measure of poses meeting a straight segment of the given length (convex area)."""
    _require_convex(ctx.disaster)
    return 2.0 * PI * ctx.disaster.area + 2.0 * length * ctx.disaster.perimeter


def segment_intersect_upper(dist: float, ctx: MeasureContext) -> float:
    """Probability that a straight segment of length ``dist`` meets the disaster area.

    Any route between two points ``dist`` apart is at least this likely to be hit.
    """
    return ctx.clamp(segment_intersect_measure(dist, ctx) / ctx.omega, "segment_intersect_upper")

"""Planar primitives: routes, polygons, disaster areas, regions and poses.

Coordinates are kilometres in a Euclidean plane. Every region is a closed
set, so points on a boundary count as inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import GeometryError
from .kernels import TOL, DiskShape, PolygonShape, segment_segment_distance

TWO_PI = 2.0 * math.pi


class Point(NamedTuple):
    x: float
    y: float


def _coords(points: Iterable) -> np.ndarray:
    arr = np.asarray([(float(p[0]), float(p[1])) for p in points], dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(arr)):
        raise GeometryError("non-finite coordinate")
    return arr


def _signed_area(xy: np.ndarray) -> float:
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _turns(xy: np.ndarray) -> np.ndarray:
    """Cross product of consecutive edges at every vertex of a closed ring."""
    e = np.roll(xy, -1, axis=0) - xy
    en = np.roll(e, -1, axis=0)
    return e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0]


@dataclass(frozen=True, eq=False)
class Polyline:
    """A route: an open chain of at least two distinct vertices."""

    vertices: tuple[Point, ...]

    def __post_init__(self):
        xy = _coords(self.vertices)
        if len(xy) < 2:
            raise GeometryError("a polyline needs at least two vertices")
        seg = np.hypot(*np.diff(xy, axis=0).T)
        if np.any(seg <= TOL):
            raise GeometryError("consecutive polyline vertices coincide")
        object.__setattr__(self, "vertices", tuple(Point(*p) for p in xy))
        object.__setattr__(self, "_xy", xy)
        if np.any(self.angles <= 1e-12):
            raise GeometryError("polyline doubles back on itself (zero inner angle)")

    @property
    def coords(self) -> np.ndarray:
        return self._xy

    @cached_property
    def segment_lengths(self) -> np.ndarray:
        return np.hypot(*np.diff(self._xy, axis=0).T)

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())

    @property
    def segments(self) -> list[tuple[Point, Point]]:
        v = self.vertices
        return list(zip(v[:-1], v[1:]))

    @cached_property
    def angles(self) -> np.ndarray:
        """Inner angle (0, pi] at every interior vertex; pi means a straight joint."""
        xy = self._xy
        if len(xy) < 3:
            return np.empty(0)
        back = xy[:-2] - xy[1:-1]
        fwd = xy[2:] - xy[1:-1]
        cos = np.einsum("ij,ij->i", back, fwd) / (np.hypot(*back.T) * np.hypot(*fwd.T))
        return np.arccos(np.clip(cos, -1.0, 1.0))

    def reversed(self) -> "Polyline":
        return Polyline(self.vertices[::-1])

    def point_at(self, s: float) -> Point:
        """Point at arc length ``s`` from the first vertex."""
        cum = np.concatenate([[0.0], np.cumsum(self.segment_lengths)])
        i = int(np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(cum) - 2))
        f = (s - cum[i]) / self.segment_lengths[i]
        p = self._xy[i] + f * (self._xy[i + 1] - self._xy[i])
        return Point(float(p[0]), float(p[1]))


@dataclass(frozen=True, eq=False)
class SimplePolygon:
    """Simple polygon, stored counter-clockwise, closed implicitly."""

    vertices: tuple[Point, ...]

    def __post_init__(self):
        xy = _coords(self.vertices)
        if len(xy) >= 2 and np.hypot(*(xy[0] - xy[-1])) <= TOL:
            xy = xy[:-1]
        if len(xy) < 3:
            raise GeometryError("a polygon needs at least three vertices")
        a = _signed_area(xy)
        if abs(a) <= TOL:
            raise GeometryError("degenerate polygon (zero area)")
        if a < 0:
            xy = xy[::-1].copy()
        _check_simple(xy)
        object.__setattr__(self, "vertices", tuple(Point(*p) for p in xy))
        object.__setattr__(self, "_xy", xy)

    @classmethod
    def _trusted(cls, xy: np.ndarray) -> "SimplePolygon":
        """Wrap counter-clockwise coordinates already known to form a simple polygon."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "vertices", tuple(Point(*p) for p in xy))
        object.__setattr__(obj, "_xy", xy)
        return obj

    @property
    def coords(self) -> np.ndarray:
        return self._xy

    @property
    def area(self) -> float:
        return abs(_signed_area(self._xy))

    @property
    def perimeter(self) -> float:
        return float(np.hypot(*(np.roll(self._xy, -1, axis=0) - self._xy).T).sum())

    @property
    def is_convex(self) -> bool:
        scale = max(1.0, float(np.ptp(self._xy, axis=0).max()))
        return bool(np.all(_turns(self._xy) >= -TOL * scale * scale))


def _check_simple(xy: np.ndarray) -> None:
    n = len(xy)
    if n == 3:
        return
    a = xy
    b = np.roll(xy, -1, axis=0)
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    d = segment_segment_distance(a[i, 0], a[i, 1], b[i, 0], b[i, 1], a[j, 0], a[j, 1], b[j, 0], b[j, 1])
    if np.any(d <= TOL):
        raise GeometryError("polygon is not simple (edges intersect)")
    # adjacent edges folding back onto each other
    e = b - a
    en = np.roll(e, -1, axis=0)
    cross = e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0]
    dot = np.einsum("ij,ij->i", e, en)
    if np.any((np.abs(cross) <= TOL * np.hypot(*e.T) * np.hypot(*en.T)) & (dot < 0)):
        raise GeometryError("polygon is not simple (edge folds back)")


def convex_hull(points: Sequence) -> SimplePolygon:
    """Counter-clockwise convex hull with collinear vertices removed."""
    xy = np.unique(_coords(points), axis=0)
    if len(xy) < 3:
        raise GeometryError("convex hull needs at least three distinct points")
    pts = sorted(map(tuple, xy))

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    scale = max(1.0, float(np.ptp(xy, axis=0).max()))
    eps = TOL * scale

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and cross(out[-2], out[-1], p) <= eps * math.dist(out[-2], p):
                out.pop()
            out.append(p)
        return out

    lower = chain(pts)
    upper = chain(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise GeometryError("points are collinear")
    return SimplePolygon(tuple(Point(*p) for p in hull))


def area(p: SimplePolygon) -> float:
    return p.area


def perimeter(p: SimplePolygon) -> float:
    return p.perimeter


def regular_polygon(n: int, circumradius: float = 1.0, center=(0.0, 0.0), phase: float = 0.0) -> SimplePolygon:
    t = phase + TWO_PI * np.arange(n) / n
    return SimplePolygon(tuple(zip(center[0] + circumradius * np.cos(t), center[1] + circumradius * np.sin(t))))


@dataclass(frozen=True, eq=False)
class DisasterArea:
    """Disaster footprint: disjoint simple polygons plus a reference point.

    When ``radius`` is set the area is an exact disk centred on ``reference``;
    ``parts`` then holds a polygonal stand-in for generic polygon code.
    """

    parts: tuple[SimplePolygon, ...]
    reference: Point
    radius: float | None = None

    def __post_init__(self):
        parts = tuple(p if isinstance(p, SimplePolygon) else SimplePolygon(tuple(p)) for p in self.parts)
        if not parts:
            raise GeometryError("a disaster area needs at least one part")
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "reference", Point(float(self.reference[0]), float(self.reference[1])))
        if self.radius is not None and not self.radius > 0:
            raise GeometryError("disk radius must be positive")
        if len(parts) > 1:
            _check_disjoint(parts)

    @classmethod
    def _moved(cls, parts, reference, radius) -> "DisasterArea":
        """Rigid image of a validated area; simplicity and disjointness carry over."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "parts", parts)
        object.__setattr__(obj, "reference", Point(*reference))
        object.__setattr__(obj, "radius", radius)
        return obj

    @classmethod
    def polygon(cls, vertices, reference=None) -> "DisasterArea":
        poly = SimplePolygon(tuple(vertices))
        if reference is None:
            reference = _centroid(poly.coords)
        return cls((poly,), reference)

    @classmethod
    def multipart(cls, parts, reference=None) -> "DisasterArea":
        polys = tuple(SimplePolygon(tuple(p)) for p in parts)
        if reference is None:
            reference = _centroid(np.concatenate([p.coords for p in polys]))
        return cls(polys, reference)

    @classmethod
    def disk(cls, radius: float, center=(0.0, 0.0), vertices: int = 360) -> "DisasterArea":
        if not radius > 0:
            raise GeometryError("disk radius must be positive")
        return cls((regular_polygon(vertices, radius, center),), Point(*center), float(radius))

    @property
    def is_disk(self) -> bool:
        return self.radius is not None

    @cached_property
    def area(self) -> float:
        if self.is_disk:
            return math.pi * self.radius ** 2
        return float(sum(p.area for p in self.parts))

    @cached_property
    def perimeter(self) -> float:
        if self.is_disk:
            return TWO_PI * self.radius
        return float(sum(p.perimeter for p in self.parts))

    @cached_property
    def diameter(self) -> float:
        if self.is_disk:
            return 2.0 * self.radius
        return diameter(self)

    @cached_property
    def is_convex(self) -> bool:
        return self.is_disk or (len(self.parts) == 1 and self.parts[0].is_convex)

    @cached_property
    def reach(self) -> float:
        """Largest distance from the reference point to the area."""
        if self.is_disk:
            return self.radius
        xy = np.concatenate([p.coords for p in self.parts])
        return float(np.hypot(xy[:, 0] - self.reference.x, xy[:, 1] - self.reference.y).max())

    @cached_property
    def shape(self):
        """Compiled shape used by the batched predicates."""
        if self.is_disk:
            return DiskShape(self.reference, self.radius)
        return PolygonShape([p.coords for p in self.parts], self.reference, self.reach)

    def as_polygonal(self) -> "DisasterArea":
        """The same area with the exact-disk flag dropped."""
        return DisasterArea(self.parts, self.reference)


def _centroid(xy: np.ndarray) -> Point:
    return Point(float(xy[:, 0].mean()), float(xy[:, 1].mean()))


def _check_disjoint(parts: Sequence[SimplePolygon]) -> None:
    for i, p in enumerate(parts):
        for q in parts[i + 1:]:
            a, b = p.coords, np.roll(p.coords, -1, axis=0)
            c, d = q.coords, np.roll(q.coords, -1, axis=0)
            dist = segment_segment_distance(
                a[:, None, 0], a[:, None, 1], b[:, None, 0], b[:, None, 1],
                c[None, :, 0], c[None, :, 1], d[None, :, 0], d[None, :, 1],
            )
            if dist.min() <= TOL:
                raise GeometryError("disaster area parts overlap or touch")
            sp = PolygonShape([p.coords], p.coords.mean(axis=0), np.inf)
            sq = PolygonShape([q.coords], q.coords.mean(axis=0), np.inf)
            if sp.contains(*c[0]) or sq.contains(*a[0]):
                raise GeometryError("disaster area parts are nested")


@dataclass(frozen=True, eq=False)
class ConvexRegion:
    """Region of interest: a convex polygon or a disk."""

    polygon: SimplePolygon | None = None
    center: Point | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.polygon is not None:
            if not self.polygon.is_convex:
                raise GeometryError("region of interest must be convex")
        elif self.center is None or self.radius is None or not self.radius > 0:
            raise GeometryError("region of interest needs a convex polygon or a disk")

    @classmethod
    def disk(cls, cx: float, cy: float, r: float) -> "ConvexRegion":
        return cls(center=Point(float(cx), float(cy)), radius=float(r))

    @classmethod
    def from_polygon(cls, vertices) -> "ConvexRegion":
        return cls(polygon=SimplePolygon(tuple(vertices)))

    @property
    def is_disk(self) -> bool:
        return self.polygon is None

    @property
    def area(self) -> float:
        return math.pi * self.radius ** 2 if self.is_disk else self.polygon.area

    @property
    def perimeter(self) -> float:
        return TWO_PI * self.radius if self.is_disk else self.polygon.perimeter

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        if self.is_disk:
            c, r = self.center, self.radius
            return c.x - r, c.y - r, c.x + r, c.y + r
        xy = self.polygon.coords
        return float(xy[:, 0].min()), float(xy[:, 1].min()), float(xy[:, 0].max()), float(xy[:, 1].max())

    def contains(self, px, py):
        """Vectorised closed membership test."""
        px = np.asarray(px, dtype=float)
        py = np.asarray(py, dtype=float)
        if self.is_disk:
            return np.hypot(px - self.center.x, py - self.center.y) <= self.radius + TOL
        a = self.polygon.coords
        b = np.roll(a, -1, axis=0)
        ex, ey = b[:, 0] - a[:, 0], b[:, 1] - a[:, 1]
        cross = ex * (py[..., None] - a[:, 1]) - ey * (px[..., None] - a[:, 0])
        return np.all(cross >= -TOL * np.hypot(ex, ey), axis=-1)

    def edges(self) -> np.ndarray:
        """Polygon edges as an (K, 4) array of x0, y0, x1, y1."""
        a = self.polygon.coords
        return np.hstack([a, np.roll(a, -1, axis=0)])


@dataclass(frozen=True)
class Pose:
    """Placement of a disaster area: reference point at (x, y), rotated by theta."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)


def diameter(d: DisasterArea) -> float:
    """Largest distance between two points of the area (over hull vertices)."""
    if d.is_disk:
        return 2.0 * d.radius
    xy = np.concatenate([p.coords for p in d.parts])
    try:
        xy = convex_hull(xy).coords
    except GeometryError:
        pass
    diff = xy[:, None, :] - xy[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=-1)).max())


def place(d: DisasterArea, pose: Pose) -> DisasterArea:
    """Rigidly move ``d``: rotate by ``pose.theta`` about its reference, then
    translate the reference to ``(pose.x, pose.y)``."""
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    rx, ry = d.reference

    def move(xy):
        dx, dy = xy[:, 0] - rx, xy[:, 1] - ry
        return np.column_stack([c * dx - s * dy + pose.x, s * dx + c * dy + pose.y])

    parts = tuple(SimplePolygon._trusted(move(p.coords)) for p in d.parts)
    return DisasterArea._moved(parts, (pose.x, pose.y), d.radius)


def _route_arrays(route: Polyline):
    xy = route.coords
    return xy[:-1, 0], xy[:-1, 1], xy[1:, 0], xy[1:, 1]


def intersects(route: Polyline, placed: DisasterArea) -> bool:
    return bool(placed.shape.hits(*_route_arrays(route)).any())


def contains_point(placed: DisasterArea, u) -> bool:
    return bool(placed.shape.contains(np.array([float(u[0])]), np.array([float(u[1])]))[0])


def clip_length(route: Polyline, placed: DisasterArea) -> float:
    """Length of the part of ``route`` lying inside ``placed``."""
    return float(min(route.length, placed.shape.clip(*_route_arrays(route)).sum()))


def clip_intervals(route: Polyline, placed: DisasterArea) -> list[tuple[float, float]]:
    """Arc-length intervals of ``route`` that lie inside ``placed``.

    Breakpoints are the crossings of every segment with the area boundary; each
    sub-interval is classified by its midpoint.
    """
    shape = placed.shape
    out: list[tuple[float, float]] = []
    offset = 0.0
    for (a, b), seg_len in zip(route.segments, route.segment_lengths):
        ts = [0.0, 1.0]
        if isinstance(shape, DiskShape):
            ts += _disk_crossings(shape, a, b)
        else:
            ts += _polygon_crossings(shape, a, b)
        ts = sorted(t for t in ts if 0.0 <= t <= 1.0)
        for t0, t1 in zip(ts[:-1], ts[1:]):
            if t1 - t0 <= 0.0:
                continue
            tm = 0.5 * (t0 + t1)
            mx, my = a[0] + tm * (b[0] - a[0]), a[1] + tm * (b[1] - a[1])
            if shape.contains(np.array([mx]), np.array([my]))[0]:
                s0, s1 = offset + t0 * seg_len, offset + t1 * seg_len
                if out and abs(out[-1][1] - s0) <= TOL:
                    out[-1] = (out[-1][0], s1)
                else:
                    out.append((s0, s1))
        offset += seg_len
    return out


def _disk_crossings(shape: DiskShape, a, b) -> list[float]:
    (cx, cy), r = shape.center, shape.radius
    dx, dy = b[0] - a[0], b[1] - a[1]
    fx, fy = a[0] - cx, a[1] - cy
    qa = dx * dx + dy * dy
    qb = 2.0 * (fx * dx + fy * dy)
    qc = fx * fx + fy * fy - r * r
    disc = qb * qb - 4.0 * qa * qc
    if disc <= 0.0:
        return []
    root = math.sqrt(disc)
    return [(-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)]


def _polygon_crossings(shape: PolygonShape, a, b) -> list[float]:
    dx, dy = b[0] - a[0], b[1] - a[1]
    ex, ey = shape.bx - shape.ax, shape.by - shape.ay
    denom = dx * ey - dy * ex
    ok = np.abs(denom) > 1e-300
    safe = np.where(ok, denom, 1.0)
    wx, wy = shape.ax - a[0], shape.ay - a[1]
    t = (wx * ey - wy * ex) / safe
    s = (wx * dy - wy * dx) / safe
    ok &= (s >= -1e-12) & (s <= 1.0 + 1e-12)
    return [float(v) for v in np.clip(t[ok], 0.0, 1.0)]


def segment_in_region(u, v, placed: DisasterArea) -> bool:
    """True iff the closed segment uv lies inside a single part of ``placed``."""
    arr = [np.array([float(w)]) for w in (u[0], u[1], v[0], v[1])]
    if math.dist(u, v) <= TOL:
        return bool(placed.shape.contains(arr[0], arr[1])[0])
    return bool(placed.shape.covers(*arr)[0])


def polyline_distance(p: Polyline, q: Polyline) -> float:
    """Minimum distance between two polylines."""
    a, b = p.coords[:-1], p.coords[1:]
    c, d = q.coords[:-1], q.coords[1:]
    return float(segment_segment_distance(
        a[:, None, 0], a[:, None, 1], b[:, None, 0], b[:, None, 1],
        c[None, :, 0], c[None, :, 1], d[None, :, 0], d[None, :, 1],
    ).min())


def arc(center, radius: float, start: float, stop: float, segments: int) -> Polyline:
    """Circular arc from angle ``start`` to ``stop`` as a polyline."""
    t = np.linspace(start, stop, segments + 1)
    return Polyline(tuple(zip(center[0] + radius * np.cos(t), center[1] + radius * np.sin(t))))

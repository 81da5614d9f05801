"""Batched planar predicates against a fixed shape.

Every query takes flat coordinate arrays (one entry per query) and is
evaluated against a shape held in its own local frame. The Monte Carlo
engine maps scene geometry into the disaster area's frame instead of
moving the disaster area, so one compiled shape serves all poses.
"""

from __future__ import annotations

import numpy as np

TOL = 1e-9

# upper bound on the number of (query, edge) pairs held in memory at once
_BLOCK = 1 << 20


def point_segment_distance(px, py, ax, ay, bx, by):
    """Euclidean distance from points to closed segments (broadcasting)."""
    dx = bx - ax
    dy = by - ay
    l2 = dx * dx + dy * dy
    safe = np.where(l2 > 0.0, l2, 1.0)
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / safe, 0.0, 1.0)
    t = np.where(l2 > 0.0, t, 0.0)
    return np.hypot(px - (ax + t * dx), py - (ay + t * dy))


def segment_segment_distance(ax, ay, bx, by, cx, cy, dx, dy):
    """Distance between closed segments AB and CD (broadcasting)."""
    ux, uy = bx - ax, by - ay
    vx, vy = dx - cx, dy - cy
    o1 = ux * (cy - ay) - uy * (cx - ax)
    o2 = ux * (dy - ay) - uy * (dx - ax)
    o3 = vx * (ay - cy) - vy * (ax - cx)
    o4 = vx * (by - cy) - vy * (bx - cx)
    proper = (o1 * o2 < 0.0) & (o3 * o4 < 0.0)
    d = np.minimum(
        np.minimum(point_segment_distance(ax, ay, cx, cy, dx, dy),
                   point_segment_distance(bx, by, cx, cy, dx, dy)),
        np.minimum(point_segment_distance(cx, cy, ax, ay, bx, by),
                   point_segment_distance(dx, dy, ax, ay, bx, by)),
    )
    return np.where(proper, 0.0, d)


def to_local(points, x, y, theta, reference):
    """Map global ``points`` (M, 2) into the frame of a shape placed at each pose.

    A pose places the shape by rotating it by ``theta`` about ``reference`` and
    translating ``reference`` to ``(x, y)``. Returns arrays of shape (N, M).
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    c = np.cos(theta)[:, None]
    s = np.sin(theta)[:, None]
    rx = points[None, :, 0] - np.asarray(x)[:, None]
    ry = points[None, :, 1] - np.asarray(y)[:, None]
    return c * rx + s * ry + reference[0], -s * rx + c * ry + reference[1]


def to_global(points, x, y, theta, reference):
    """Inverse of :func:`to_local`: place local ``points`` at each pose."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    c = np.cos(theta)[:, None]
    s = np.sin(theta)[:, None]
    rx = points[None, :, 0] - reference[0]
    ry = points[None, :, 1] - reference[1]
    return c * rx - s * ry + np.asarray(x)[:, None], s * rx + c * ry + np.asarray(y)[:, None]


class DiskShape:
    """Exact closed disk."""

    def __init__(self, center, radius):
        self.center = (float(center[0]), float(center[1]))
        self.radius = float(radius)

    def contains(self, px, py):
        cx, cy = self.center
        return np.hypot(np.asarray(px) - cx, np.asarray(py) - cy) <= self.radius + TOL

    def boundary_distance(self, px, py):
        cx, cy = self.center
        return np.abs(np.hypot(np.asarray(px) - cx, np.asarray(py) - cy) - self.radius)

    def hits(self, ax, ay, bx, by):
        cx, cy = self.center
        return point_segment_distance(cx, cy, ax, ay, bx, by) <= self.radius + TOL

    def clip(self, ax, ay, bx, by):
        cx, cy = self.center
        ax, ay, bx, by = (np.asarray(v, dtype=float) for v in (ax, ay, bx, by))
        dx, dy = bx - ax, by - ay
        fx, fy = ax - cx, ay - cy
        a = dx * dx + dy * dy
        b = 2.0 * (fx * dx + fy * dy)
        c = fx * fx + fy * fy - self.radius ** 2
        disc = b * b - 4.0 * a * c
        ok = (disc > 0.0) & (a > 0.0)
        root = np.sqrt(np.where(ok, disc, 0.0))
        safe = np.where(a > 0.0, a, 1.0)
        t1 = np.clip((-b - root) / (2.0 * safe), 0.0, 1.0)
        t2 = np.clip((-b + root) / (2.0 * safe), 0.0, 1.0)
        return np.where(ok, (t2 - t1) * np.sqrt(a), 0.0)

    def covers(self, ax, ay, bx, by):
        return self.contains(ax, ay) & self.contains(bx, by)


class PolygonShape:
    """Union of pairwise-disjoint simple polygons, boundary included."""

    def __init__(self, parts, center, radius):
        a = []
        b = []
        for ring in parts:
            ring = np.asarray(ring, dtype=float)
            a.append(ring)
            b.append(np.roll(ring, -1, axis=0))
        a = np.concatenate(a)
        b = np.concatenate(b)
        self.ax, self.ay = a[:, 0], a[:, 1]
        self.bx, self.by = b[:, 0], b[:, 1]
        self.center = (float(center[0]), float(center[1]))
        # bounding circle used to skip queries that cannot touch the shape
        self.radius = float(radius)
        dy = self.by - self.ay
        self._dy_safe = np.where(dy != 0.0, dy, 1.0)

    @property
    def n_edges(self):
        return self.ax.size

    def _chunks(self, n, per_query=1):
        step = max(1, _BLOCK // max(1, self.n_edges * per_query))
        for start in range(0, n, step):
            yield slice(start, min(n, start + step))

    def _near(self, ax, ay, bx=None, by=None):
        cx, cy = self.center
        if bx is None:
            d = np.hypot(ax - cx, ay - cy)
        else:
            d = point_segment_distance(cx, cy, ax, ay, bx, by)
        return d <= self.radius + TOL

    def boundary_distance(self, px, py):
        px = np.asarray(px, dtype=float)
        py = np.asarray(py, dtype=float)
        shape = px.shape
        px, py = px.ravel(), py.ravel()
        out = np.empty(px.size)
        for sl in self._chunks(px.size):
            out[sl] = point_segment_distance(
                px[sl, None], py[sl, None], self.ax, self.ay, self.bx, self.by
            ).min(axis=1)
        return out.reshape(shape)

    def _contains_raw(self, px, py):
        out = np.zeros(px.size, dtype=bool)
        for sl in self._chunks(px.size):
            x = px[sl, None]
            y = py[sl, None]
            straddle = (self.ay > y) != (self.by > y)
            xint = self.ax + (y - self.ay) * (self.bx - self.ax) / self._dy_safe
            odd = np.count_nonzero(straddle & (x < xint), axis=1) % 2 == 1
            edge = point_segment_distance(x, y, self.ax, self.ay, self.bx, self.by)
            out[sl] = odd | (edge.min(axis=1) <= TOL)
        return out

    def contains(self, px, py):
        px = np.asarray(px, dtype=float)
        py = np.asarray(py, dtype=float)
        shape = px.shape
        px, py = px.ravel(), py.ravel()
        out = np.zeros(px.size, dtype=bool)
        near = self._near(px, py)
        if near.any():
            out[near] = self._contains_raw(px[near], py[near])
        return out.reshape(shape)

    def hits(self, ax, ay, bx, by):
        ax, ay, bx, by = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (ax, ay, bx, by)))
        shape = ax.shape
        ax, ay, bx, by = ax.ravel(), ay.ravel(), bx.ravel(), by.ravel()
        out = np.zeros(ax.size, dtype=bool)
        idx = np.flatnonzero(self._near(ax, ay, bx, by))
        if idx.size:
            sa, sb, sc, sd = ax[idx], ay[idx], bx[idx], by[idx]
            hit = self._contains_raw(sa, sb) | self._contains_raw(sc, sd)
            rest = np.flatnonzero(~hit)
            for sl in self._chunks(rest.size):
                r = rest[sl]
                d = segment_segment_distance(
                    sa[r, None], sb[r, None], sc[r, None], sd[r, None],
                    self.ax, self.ay, self.bx, self.by,
                )
                hit[r] = d.min(axis=1) <= TOL
            out[idx] = hit
        return out.reshape(shape)

    def clip(self, ax, ay, bx, by):
        ax, ay, bx, by = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (ax, ay, bx, by)))
        shape = ax.shape
        ax, ay, bx, by = ax.ravel(), ay.ravel(), bx.ravel(), by.ravel()
        out = np.zeros(ax.size)
        idx = np.flatnonzero(self._near(ax, ay, bx, by))
        k = self.n_edges
        for sl in self._chunks(idx.size, per_query=k + 2):
            r = idx[sl]
            x0, y0 = ax[r, None], ay[r, None]
            dx, dy = bx[r, None] - x0, by[r, None] - y0
            ex, ey = self.bx - self.ax, self.by - self.ay
            denom = dx * ey - dy * ex
            safe = np.where(np.abs(denom) > 1e-300, denom, 1.0)
            wx, wy = self.ax - x0, self.ay - y0
            t = (wx * ey - wy * ex) / safe
            s = (wx * dy - wy * dx) / safe
            valid = (np.abs(denom) > 1e-300) & (s >= -1e-12) & (s <= 1.0 + 1e-12)
            t = np.where(valid, np.clip(t, 0.0, 1.0), 0.0)
            ts = np.sort(np.concatenate([np.zeros((r.size, 1)), t, np.ones((r.size, 1))], axis=1), axis=1)
            width = np.diff(ts, axis=1)
            mid = 0.5 * (ts[:, 1:] + ts[:, :-1])
            mx = (x0 + mid * dx).ravel()
            my = (y0 + mid * dy).ravel()
            live = width.ravel() > 0.0
            inside = np.zeros(mx.size, dtype=bool)
            if live.any():
                inside[live] = self._contains_raw(mx[live], my[live])
            frac = (width * inside.reshape(width.shape)).sum(axis=1)
            out[r] = frac * np.hypot(dx[:, 0], dy[:, 0])
        return out.reshape(shape)

    def covers(self, ax, ay, bx, by):
        ax, ay, bx, by = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (ax, ay, bx, by)))
        length = np.hypot(bx - ax, by - ay)
        ends = self.contains(ax, ay) & self.contains(bx, by)
        out = ends.copy()
        if ends.any():
            clipped = self.clip(ax[ends], ay[ends], bx[ends], by[ends])
            out[ends] = clipped >= length[ends] * (1.0 - 1e-9) - TOL
        return out


def polyline_segments(vx, vy):
    """Split vertex arrays (..., M+1) into segment endpoint arrays (..., M)."""
    return vx[..., :-1], vy[..., :-1], vx[..., 1:], vy[..., 1:]

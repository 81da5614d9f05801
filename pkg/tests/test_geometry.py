import itertools
import math

import numpy as np
import pytest
import shapely
from hypothesis import given, settings, strategies as st

from quakenet.errors import GeometryError
from quakenet.geometry import (
    ConvexRegion, DisasterArea, Polyline, Pose, SimplePolygon, area, clip_intervals, clip_length,
    contains_point, convex_hull, diameter, intersects, perimeter, place, regular_polygon, segment_in_region,
)

UNIT_SQUARE = ((0, 0), (1, 0), (1, 1), (0, 1))


def square_area(cx=0.5, cy=0.5, side=1.0, reference=None):
    h = side / 2
    return DisasterArea.polygon(((cx - h, cy - h), (cx + h, cy - h), (cx + h, cy + h), (cx - h, cy + h)), reference)


# ---------------------------------------------------------------- area / perimeter


def test_area_unit_square():
    assert area(SimplePolygon(UNIT_SQUARE)) == pytest.approx(1.0)


def test_area_triangle():
    assert area(SimplePolygon(((0, 0), (2, 0), (0, 2)))) == pytest.approx(2.0)


def test_area_regular_hexagon():
    # closed form for a regular n-gon: n r^2 sin(2 pi / n) / 2
    expected = 6 * math.sin(2 * math.pi / 6) / 2
    assert expected == pytest.approx(2.598076, abs=1e-6)
    assert area(regular_polygon(6, 1.0)) == pytest.approx(expected, rel=1e-12)


def test_clockwise_input_is_normalised():
    p = SimplePolygon(UNIT_SQUARE[::-1])
    assert area(p) == pytest.approx(1.0)
    x, y = p.coords[:, 0], p.coords[:, 1]
    assert 0.5 * (x @ np.roll(y, -1) - np.roll(x, -1) @ y) > 0


def test_perimeter_unit_square():
    assert perimeter(SimplePolygon(UNIT_SQUARE)) == pytest.approx(4.0)


def test_perimeter_345_triangle():
    assert perimeter(SimplePolygon(((0, 0), (3, 0), (0, 4)))) == pytest.approx(12.0)


@pytest.mark.parametrize("verts", [
    ((0, 0), (1, 0), (2, 0)),
    ((0, 0), (1, 1)),
    ((0, 0), (2, 0), (0, 1), (2, 1)),
])
def test_degenerate_or_self_intersecting_polygon_rejected(verts):
    with pytest.raises(GeometryError):
        SimplePolygon(verts)


# ---------------------------------------------------------------- diameter


def test_diameter_unit_square():
    assert diameter(square_area()) == pytest.approx(math.sqrt(2))


def test_diameter_polygonal_disk():
    d = DisasterArea.disk(1.5).as_polygonal()
    assert diameter(d) == pytest.approx(3.0, rel=1e-3)


def test_diameter_two_part_area():
    # two unit squares turned 45 degrees, centres 5 km apart along x
    def diamond(cx):
        h = math.sqrt(2) / 2
        return ((cx - h, 0), (cx, -h), (cx + h, 0), (cx, h))

    parts = [diamond(0.0), diamond(5.0)]
    d = DisasterArea.multipart(parts)
    brute = max(math.dist(p, q) for p, q in itertools.combinations([v for part in parts for v in part], 2))
    assert brute == pytest.approx(5 + math.sqrt(2))
    assert diameter(d) == pytest.approx(brute, rel=1e-12)


def test_overlapping_parts_rejected():
    with pytest.raises(GeometryError):
        DisasterArea.multipart([UNIT_SQUARE, ((0.5, 0.5), (2, 0.5), (2, 2), (0.5, 2))])


# ---------------------------------------------------------------- convex hull


def test_hull_drops_interior_point():
    hull = convex_hull(list(UNIT_SQUARE) + [(0.5, 0.5)])
    assert sorted(map(tuple, hull.coords.tolist())) == sorted(map(tuple, np.array(UNIT_SQUARE, float).tolist()))


def test_hull_collinear_rejected():
    with pytest.raises(GeometryError):
        convex_hull([(0, 0), (1, 1), (2, 2), (3, 3)])


def test_hull_contains_random_points():
    rng = np.random.default_rng(3)
    r = np.sqrt(rng.random(100))
    t = rng.uniform(0, 2 * math.pi, 100)
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
    hull = convex_hull(pts)
    region = ConvexRegion(polygon=hull)
    assert region.contains(pts[:, 0], pts[:, 1]).all()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=3, max_size=40))
def test_hull_is_convex_and_contains_inputs(points):
    try:
        hull = convex_hull(points)
    except GeometryError:
        return
    xy = hull.coords
    e = np.roll(xy, -1, axis=0) - xy
    en = np.roll(e, -1, axis=0)
    assert np.all(e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0] >= -1e-9)
    poly = shapely.Polygon(xy)
    for p in points:
        assert poly.distance(shapely.Point(p)) <= 1e-7


# ---------------------------------------------------------------- place


def test_identity_pose():
    d = square_area(0.0, 0.0, reference=(0.0, 0.0))
    moved = place(d, Pose(0.0, 0.0, 0.0))
    assert np.allclose(moved.parts[0].coords, d.parts[0].coords)


def test_half_turn_of_centred_square_is_same_set():
    d = square_area(0.0, 0.0, reference=(0.0, 0.0))
    moved = place(d, Pose(0.0, 0.0, math.pi))
    a = shapely.Polygon(d.parts[0].coords)
    b = shapely.Polygon(moved.parts[0].coords)
    assert a.symmetric_difference(b).area < 1e-12


def test_theta_wraps():
    assert Pose(0, 0, 2 * math.pi + 0.5).theta == pytest.approx(0.5)
    assert Pose(0, 0, -0.5).theta == pytest.approx(2 * math.pi - 0.5)


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(0, 2 * math.pi))
def test_place_is_rigid(x, y, theta):
    d = DisasterArea.polygon(((0, 0), (3, 0), (4, 2), (1, 3), (-1, 1)))
    moved = place(d, Pose(x, y, theta))
    assert moved.area == pytest.approx(d.area, rel=1e-9)
    assert moved.perimeter == pytest.approx(d.perimeter, rel=1e-9)
    assert moved.diameter == pytest.approx(d.diameter, rel=1e-9)
    assert moved.reference == pytest.approx((x, y))


# ---------------------------------------------------------------- predicates


def test_segment_crossing_edge_intersects():
    assert intersects(Polyline(((-1, 0.5), (0.5, 0.5))), square_area())


def test_far_segment_does_not_intersect():
    assert not intersects(Polyline(((5, 5), (6, 7))), square_area())


def test_segment_inside_intersects():
    assert intersects(Polyline(((0.2, 0.2), (0.8, 0.7))), square_area())


def test_contains_point_conventions():
    d = square_area()
    assert contains_point(d, (0.5, 0.5))
    assert contains_point(d, (1.0, 1.0))
    assert not contains_point(d, (1.0 + math.sqrt(2), 0.5))


def test_clip_spanning_segment():
    assert clip_length(Polyline(((-1, 0.5), (2, 0.5))), square_area()) == pytest.approx(1.0)


def test_clip_disjoint():
    assert clip_length(Polyline(((3, 3), (4, 4))), square_area()) == 0.0


def test_clip_contained():
    route = Polyline(((0.1, 0.1), (0.9, 0.2), (0.5, 0.9)))
    assert clip_length(route, square_area()) == pytest.approx(route.length)


def test_clip_exact_disk_chord():
    d = DisasterArea.disk(1.0)
    assert clip_length(Polyline(((-3, 0.6), (3, 0.6))), d) == pytest.approx(2 * math.sqrt(1 - 0.36), rel=1e-12)


def _membership_oracle(a, b, poly, n=100_000):
    """Inside length of segment ab by dense sampling, crossings refined by bisection."""
    sp = shapely.Polygon(poly)
    t = np.linspace(0.0, 1.0, n + 1)
    pts = np.outer(1 - t, a) + np.outer(t, b)
    inside = shapely.covers(sp, shapely.points(pts))
    edges = [0.0]
    for i in np.flatnonzero(inside[1:] != inside[:-1]):
        lo, hi = t[i], t[i + 1]
        want = inside[i]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if sp.covers(shapely.Point(*(np.asarray(a) * (1 - mid) + np.asarray(b) * mid))) == want:
                lo = mid
            else:
                hi = mid
        edges.append(0.5 * (lo + hi))
    edges.append(1.0)
    total = 0.0
    state = inside[0]
    for e0, e1 in zip(edges[:-1], edges[1:]):
        if state:
            total += e1 - e0
        state = not state
    return total * math.dist(a, b)


def test_clip_matches_sampling_oracle():
    poly = ((0, 0), (3, -1), (4, 2), (1.5, 3.5), (-0.5, 1.5))
    d = DisasterArea.polygon(poly)
    a, b = (-2.0, 0.3), (2.0, 1.1)
    oracle = _membership_oracle(a, b, poly)
    assert clip_length(Polyline((a, b)), d) == pytest.approx(oracle, abs=1e-6)


def test_clip_intervals_concave_area():
    u_shape = DisasterArea.polygon(((0, 0), (3, 0), (3, 3), (2, 3), (2, 1), (1, 1), (1, 3), (0, 3)))
    spans = clip_intervals(Polyline(((-1, 2), (4, 2))), u_shape)
    assert spans == [pytest.approx((1.0, 2.0)), pytest.approx((3.0, 4.0))]


def test_segment_in_region_chord():
    d = DisasterArea.disk(1.0).as_polygonal()
    assert segment_in_region((-0.5, 0.1), (0.6, -0.2), d)


def test_segment_in_region_two_parts():
    d = DisasterArea.multipart([UNIT_SQUARE, ((2, 0), (3, 0), (3, 1), (2, 1))])
    assert not segment_in_region((0.5, 0.5), (2.5, 0.5), d)


def test_segment_in_region_boundary_endpoint():
    assert segment_in_region((0.0, 0.5), (0.5, 0.5), square_area())


def test_segment_in_region_concave_notch():
    u_shape = DisasterArea.polygon(((0, 0), (3, 0), (3, 3), (2, 3), (2, 1), (1, 1), (1, 3), (0, 3)))
    assert not segment_in_region((0.5, 2.0), (2.5, 2.0), u_shape)


def test_polyline_rejects_repeated_vertex():
    with pytest.raises(GeometryError):
        Polyline(((0, 0), (0, 0), (1, 1)))


def test_polyline_angles():
    route = Polyline(((0, 0), (1, 0), (1, 1), (2, 1)))
    assert route.angles == pytest.approx([math.pi / 2, math.pi / 2])
    assert Polyline(((0, 0), (1, 0), (2, 0))).angles == pytest.approx([math.pi])


# ---------------------------------------------------------------- properties

coord = st.floats(-3, 4)
segments = st.tuples(coord, coord, coord, coord).filter(lambda s: math.dist(s[:2], s[2:]) > 1e-3)
CONVEX = DisasterArea.polygon(((0, 0), (2, -0.5), (3, 1), (1.5, 2.5), (-0.5, 1.2)))


@settings(max_examples=150, deadline=None)
@given(segments)
def test_clip_bounded_by_length(seg):
    route = Polyline((seg[:2], seg[2:]))
    c = clip_length(route, CONVEX)
    assert 0.0 <= c <= route.length + 1e-12
    inside = [contains_point(CONVEX, p) for p in (seg[:2], seg[2:], ((seg[0] + seg[2]) / 2, (seg[1] + seg[3]) / 2))]
    assert (c >= route.length - 1e-9) == all(inside)


@settings(max_examples=150, deadline=None)
@given(segments)
def test_intersects_iff_clip_or_touch(seg):
    route = Polyline((seg[:2], seg[2:]))
    hit = intersects(route, CONVEX)
    c = clip_length(route, CONVEX)
    if c > 1e-9:
        assert hit
    if hit and c <= 1e-9:
        assert shapely.LineString(route.coords).distance(shapely.Polygon(CONVEX.parts[0].coords)) <= 1e-9
    if not hit:
        assert shapely.LineString(route.coords).distance(shapely.Polygon(CONVEX.parts[0].coords)) > 0


@settings(max_examples=150, deadline=None)
@given(coord, coord, coord, coord)
def test_convexity_consistency(ux, uy, vx, vy):
    if contains_point(CONVEX, (ux, uy)) and contains_point(CONVEX, (vx, vy)):
        assert segment_in_region((ux, uy), (vx, vy), CONVEX)


def test_convexity_flag():
    assert square_area().is_convex
    assert not DisasterArea.polygon(((0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2))).is_convex
    assert not DisasterArea.multipart([UNIT_SQUARE, ((2, 0), (3, 0), (3, 1), (2, 1))]).is_convex


def test_region_rejects_concave_polygon():
    with pytest.raises(GeometryError):
        ConvexRegion.from_polygon(((0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)))

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import SCENARIOS, path_doc, two_node_doc
from quakenet.errors import ScenarioError
from quakenet.geometry import Pose
from quakenet.netmodel import FailureDraw, connected_after, dump_scenario, load_scenario, mean_failure_count
from quakenet.simulate import draw_failures
from quakenet.synthetic import circle_ring_scenario, ring12_scenario


def errors_of(doc):
    with pytest.raises(ScenarioError) as info:
        load_scenario(doc)
    return info.value.errors


# ---------------------------------------------------------------- loading


def test_minimal_scenario_loads():
    sc = load_scenario(two_node_doc())
    assert set(sc.nodes) == {"s", "t"}
    assert sc.links["st"].length == pytest.approx(1.0)
    assert sc.route_nodes("direct") == ["s", "t"]


def test_loads_from_path_and_text(tmp_path):
    doc = two_node_doc()
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    assert set(load_scenario(path).nodes) == {"s", "t"}
    assert set(load_scenario(str(path)).nodes) == {"s", "t"}
    assert set(load_scenario(json.dumps(doc)).nodes) == {"s", "t"}


@pytest.mark.parametrize("name", sorted(p.name for p in SCENARIOS.glob("*.json")))
def test_shipped_scenarios_load(name):
    sc = load_scenario(SCENARIOS / name)
    assert sc.nodes and sc.links


def test_path_endpoint_off_node():
    doc = two_node_doc()
    doc["links"][0]["path"] = [[-0.5, 0.0], [0.5, 1.0]]
    errs = errors_of(doc)
    assert any(e.startswith("links[0].path[1]") and "1 km" in e for e in errs)


def test_ring_routes_sharing_a_middle_node():
    doc = {
        "region": {"disk": {"cx": 0, "cy": 0, "r": 10}},
        "disaster": {"disk": {"cx": 0, "cy": 0, "r": 1}},
        "nodes": [{"id": n, "x": x, "y": y} for n, x, y in
                  (("s", -2, 0), ("m", 0, 0), ("t", 2, 0), ("a", -1, 1), ("b", 1, -1))],
        "links": [{"id": i, "from": a, "to": b} for i, a, b in
                  (("sa", "s", "a"), ("am", "a", "m"), ("mt", "m", "t"),
                   ("sm", "s", "m"), ("mb", "m", "b"), ("bt", "b", "t"))],
        "routes": [{"name": "r1", "s": "s", "t": "t", "links": ["sa", "am", "mt"]},
                   {"name": "r2", "s": "s", "t": "t", "links": ["sm", "mb", "bt"]}],
        "ring_pairs": [{"name": "bad", "route1": "r1", "route2": "r2"}],
    }
    errs = errors_of(doc)
    assert any(e.startswith("ring_pairs[0]") and "'m'" in e for e in errs)


def test_errors_are_collected_with_locations():
    doc = two_node_doc()
    doc["nodes"][0]["alpha"] = 1.5
    doc["links"][0]["beta"] = -1
    doc["nodes"].append({"id": "far", "x": 9.0, "y": 0.0})
    errs = errors_of(doc)
    assert any(e.startswith("nodes[0].alpha") for e in errs)
    assert any(e.startswith("links[0].beta") for e in errs)
    assert any("far" in e and "outside" in e for e in errs)


def test_disconnected_route_rejected():
    doc = path_doc([(0, 0), (1, 0), (2, 0)], [0, 0, 0], [0, 0])
    doc["routes"][0]["links"] = ["e1"]
    doc["routes"][0]["s"] = "0"
    errs = errors_of(doc)
    assert any(e.startswith("routes[0]") for e in errs)


def test_missing_keys_and_bad_json():
    assert errors_of({"nodes": []})[0].startswith("<root>")
    assert errors_of("{not json")[0].startswith("<parse>")


def test_polygon_disaster_and_region():
    sc = load_scenario(SCENARIOS / "multipart.json")
    assert len(sc.disaster.parts) == 2
    assert not sc.region.is_disk


# ---------------------------------------------------------------- failure counts


def test_mean_failure_count_two_nodes():
    sc = load_scenario(two_node_doc(alpha=0.1, beta=0.05, length=2.0, region_radius=3.0))
    assert mean_failure_count("direct", sc) == pytest.approx(0.3)


def test_mean_failure_count_zero():
    sc = load_scenario(two_node_doc(alpha=0.0, beta=0.0))
    assert mean_failure_count("direct", sc) == 0.0


def test_mean_failure_count_five_links():
    pts = [(0, 0), (3, 4), (3, 9), (6, 13), (6, 14), (0, 22)]
    alphas = [0.01, 0.02, 0.0, 0.05, 0.1, 0.03]
    betas = [0.1, 0.02, 0.0, 0.3, 0.05]
    sc = load_scenario(path_doc(pts, alphas, betas))
    # lengths 5, 5, 5, 1, 10
    expected = (0.01 + 0.02 + 0.0 + 0.05 + 0.1 + 0.03) + (0.5 + 0.1 + 0.0 + 0.3 + 0.5)
    assert mean_failure_count("chain", sc) == pytest.approx(expected, rel=1e-12)


# ---------------------------------------------------------------- connectivity


RING12 = load_scenario(ring12_scenario())


def ring():
    return load_scenario(circle_ring_scenario(2.0, 3, 0.1, 1.0))


def test_no_failures_connected():
    sc = ring()
    assert connected_after("0", "3", sc, FailureDraw())


def test_failed_end_node_disconnects():
    sc = ring()
    assert not connected_after("0", "3", sc, FailureDraw(frozenset({"0"})))


def test_ring_cut_logic():
    sc = ring()
    upper, lower = sc.routes["upper"].links, sc.routes["lower"].links
    both = FailureDraw(failed_points={upper[1]: (0.3,), lower[0]: (0.1,)})
    one = FailureDraw(failed_points={upper[1]: (0.3, 0.5)})
    assert not connected_after("0", "3", sc, both)
    assert connected_after("0", "3", sc, one)


def test_unknown_node():
    with pytest.raises(KeyError):
        connected_after("0", "zz", ring(), FailureDraw())


@settings(max_examples=100, deadline=None)
@given(st.sets(st.sampled_from([str(i) for i in range(12)])), st.sets(st.sampled_from([f"{i}-{i % 12 + 1}" for i in range(1, 13)])),
       st.sampled_from([str(i) for i in range(12)]), st.sampled_from([f"{i}-{i % 12 + 1}" for i in range(1, 13)]))
def test_more_failures_never_reconnect(nodes, links, extra_node, extra_link):
    sc = RING12
    nodes = {n for n in nodes if n in sc.nodes}
    base = FailureDraw(frozenset(nodes), {lid: (0.1,) for lid in links})
    more = FailureDraw(frozenset(nodes | ({extra_node} & set(sc.nodes))), {lid: (0.1,) for lid in links | {extra_link}})
    for s, t in (("1", "7"), ("2", "11"), ("5", "6")):
        if not connected_after(s, t, sc, base):
            assert not connected_after(s, t, sc, more)


def test_failure_draw_positions_within_links():
    sc = load_scenario(circle_ring_scenario(2.0, 3, 0.8, 2.0, alpha=0.3))
    draws = draw_failures(sc, Pose(-1.0, 0.5, 0.4), np.random.default_rng(0), draws=300)
    assert any(d.failed_nodes for d in draws)
    for d in draws:
        for lid, pts in d.failed_points.items():
            assert all(0.0 <= p <= sc.links[lid].length for p in pts)


def test_failure_draw_counts_match_rate():
    doc = two_node_doc(alpha=0.0, beta=0.7, length=2.0, disaster_radius=2.0, region_radius=3.0)
    sc = load_scenario(doc)
    draws = draw_failures(sc, Pose(0.0, 0.0, 0.0), np.random.default_rng(1), draws=20_000)
    counts = np.array([len(d.failed_points["st"]) for d in draws])
    assert abs(counts.mean() - 1.4) < 4 * math.sqrt(1.4 / counts.size)


# ---------------------------------------------------------------- round trip


def _geom(sc):
    out = [tuple(sc.region.bbox)]
    out += [(n.id, n.location.x, n.location.y, n.alpha) for n in sorted(sc.nodes.values(), key=lambda n: n.id)]
    for ln in sorted(sc.links.values(), key=lambda l: l.id):
        out.append((ln.id, ln.source, ln.target, ln.beta, tuple(ln.path.coords.ravel())))
    out += [tuple(p.coords.ravel()) for p in sc.disaster.parts]
    return out


def _close(a, b):
    for x, y in zip(a, b):
        if isinstance(x, tuple):
            _close(x, y)
        elif isinstance(x, float):
            assert x == pytest.approx(y, abs=1e-9)
        else:
            assert x == y


@pytest.mark.parametrize("name", sorted(p.name for p in SCENARIOS.glob("*.json")))
def test_round_trip_shipped(name):
    sc = load_scenario(SCENARIOS / name)
    again = load_scenario(json.loads(json.dumps(dump_scenario(sc))))
    _close(_geom(sc), _geom(again))
    assert again.routes == sc.routes and again.ring_pairs == sc.ring_pairs


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(-20, 20), st.floats(-20, 20)), min_size=2, max_size=6, unique=True),
       st.floats(0, 1), st.floats(0, 5))
def test_round_trip_random_paths(points, alpha, beta):
    if any(math.dist(p, q) < 1e-3 for p, q in zip(points, points[1:])):
        return
    sc = load_scenario(path_doc(points, [alpha] * len(points), [beta] * (len(points) - 1)))
    again = load_scenario(dump_scenario(sc))
    _close(_geom(sc), _geom(again))

import json
import math
from pathlib import Path

import pytest

from quakenet.geometry import ConvexRegion, DisasterArea
from quakenet.measure import MeasureContext

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def z_score(estimate, expected, stderr):
    """Distance between an estimate and a reference value in standard errors."""
    if stderr == 0:
        return 0.0 if estimate == expected else math.inf
    return abs(estimate - expected) / stderr


@pytest.fixture
def example1_ctx():
    """Unit-radius disk disaster inside a radius-2 disk region."""
    return MeasureContext(DisasterArea.disk(1.0), ConvexRegion.disk(0.0, 0.0, 2.0))


@pytest.fixture
def scenario_doc():
    def load(name):
        return json.loads((SCENARIOS / name).read_text())
    return load


def two_node_doc(alpha=0.1, beta=0.1, length=1.0, disaster_radius=1.0, region_radius=2.0):
    return {
        "region": {"disk": {"cx": 0.0, "cy": 0.0, "r": region_radius}},
        "disaster": {"disk": {"cx": 0.0, "cy": 0.0, "r": disaster_radius}},
        "nodes": [
            {"id": "s", "x": -length / 2, "y": 0.0, "alpha": alpha},
            {"id": "t", "x": length / 2, "y": 0.0, "alpha": alpha},
        ],
        "links": [{"id": "st", "from": "s", "to": "t", "beta": beta,
                   "path": [[-length / 2, 0.0], [length / 2, 0.0]]}],
        "routes": [{"name": "direct", "s": "s", "t": "t", "links": ["st"]}],
    }


def path_doc(points, alphas, betas, region_radius=50.0, disaster_radius=1.0):
    """Chain of nodes at ``points`` joined by straight links."""
    nodes = [{"id": str(i), "x": x, "y": y, "alpha": a} for i, ((x, y), a) in enumerate(zip(points, alphas))]
    links = [{"id": f"e{i}", "from": str(i), "to": str(i + 1), "beta": b,
              "path": [list(points[i]), list(points[i + 1])]} for i, b in enumerate(betas)]
    return {
        "region": {"disk": {"cx": 0.0, "cy": 0.0, "r": region_radius}},
        "disaster": {"disk": {"cx": 0.0, "cy": 0.0, "r": disaster_radius}},
        "nodes": nodes,
        "links": links,
        "routes": [{"name": "chain", "s": "0", "t": str(len(points) - 1), "links": [l["id"] for l in links]}],
    }


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

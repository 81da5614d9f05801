"""Server placement over the network's nodes.

Two objectives: the expected number of nodes cut off from the server (tree
networks), and the worst disconnection probability from the server to any
other node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionViolated, DomainError
from .measure import MeasureContext
from .metrics import mean_disconnected_nodes, pair_disconnect, sorted_nodes, topology
from .netmodel import NetworkScenario
from .simulate import SamplerConfig, estimate_disconnect_matrix

ESTIMATORS = ("auto", "closed", "approx", "mc")
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class PlacementReport:
    """Optimal server node plus the per-node table it was chosen from.

    ``table`` maps node id to a dict with ``mean`` (expected disconnected
    count) and/or ``worst`` (largest disconnection probability) and, for Monte
    Carlo runs, ``worst_stderr``.
    """

    best_node_mean: str | None
    best_node_worst: str | None
    table: dict
    estimator: str = "closed"
    matrix: dict = field(default_factory=dict)
    ties: tuple = ()


def _ties(table: dict, key: str) -> tuple:
    """Nodes whose ``key`` value equals the minimum up to rounding, in id order."""
    low = min(row[key] for row in table.values())
    return tuple(n for n, row in table.items() if row[key] <= low + TIE_RTOL * abs(low) + 1e-300)


def _argmin(table: dict, key: str) -> str:
    """Node with the smallest ``key`` value; ties go to the lowest id (nodes are pre-sorted)."""
    return _ties(table, key)[0]


def optimal_server_mean(scenario: NetworkScenario, ctx: MeasureContext) -> PlacementReport:
    """Node minimising the expected number of disconnected destinations (tree networks)."""
    if topology(scenario) != "tree":
        raise AssumptionViolated("mean-count placement needs a tree network; use the worst-case placement")
    table = {s: {"mean": mean_disconnected_nodes(s, scenario, ctx).value} for s in sorted_nodes(scenario)}
    return PlacementReport(_argmin(table, "mean"), None, table, ties=_ties(table, "mean"))


def disconnect_table(scenario: NetworkScenario, ctx: MeasureContext | None, estimator: str = "auto",
                     cfg: SamplerConfig | None = None):
    """Pairwise disconnection probabilities as (ids, estimates, stderrs, estimator used)."""
    if estimator not in ESTIMATORS:
        raise DomainError(f"estimator must be one of {ESTIMATORS}")
    ids = sorted_nodes(scenario)
    kind = topology(scenario)
    if estimator == "auto":
        estimator = "closed" if kind in ("tree", "ring") else "mc"
    if estimator == "mc":
        ids, est, err = estimate_disconnect_matrix(scenario, cfg or SamplerConfig())
        return ids, est, err, "mc"
    if kind not in ("tree", "ring"):
        raise AssumptionViolated("closed forms cover tree and ring networks only; use the Monte Carlo estimator")
    n = len(ids)
    est = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            p = pair_disconnect(ids[a], ids[b], scenario, ctx, approx=estimator == "approx")
            est[a, b] = est[b, a] = p
    return ids, est, np.zeros_like(est), estimator


def optimal_server_worst(scenario: NetworkScenario, ctx: MeasureContext | None, estimator: str = "auto",
                         cfg: SamplerConfig | None = None) -> PlacementReport:
    """Node minimising its largest disconnection probability to any other node.

    ``auto`` uses closed forms for tree and ring networks and Monte Carlo
    otherwise. Monte Carlo evaluates every candidate on the same poses.
    """
    ids, est, err, used = disconnect_table(scenario, ctx, estimator, cfg)
    table = {}
    for i, s in enumerate(ids):
        j = int(np.argmax(est[i])) if len(ids) > 1 else i
        row = {"worst": float(est[i, j]), "worst_target": ids[j]}
        if used == "mc":
            row["worst_stderr"] = float(err[i, j])
        table[s] = row
    matrix = {s: {t: float(est[i, k]) for k, t in enumerate(ids) if t != s} for i, s in enumerate(ids)}
    return PlacementReport(None, _argmin(table, "worst"), table, used, matrix, _ties(table, "worst"))

"""``quakenet`` command line: batch analyses of a scenario file.

Every subcommand writes one table (CSV by default, JSON with ``--format
json``) to stdout or ``--out``. With ``--out`` a run manifest holding the
settings and a SHA-256 digest of the table is written next to it as
``<out>.manifest.json``; the table itself carries no timestamps, so fixed
seeds give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ApproximationError, AssumptionViolated, QuakeNetError, ScenarioError
from .measure import MeasureContext, SURROGATE_MODES, prob_route_intersect, surrogate_for, validate_separation
from .metrics import (CostField, analyze_ring, expected_additive_cost, ring_bounds, ring_failure_count,
                      route_failure_count, single_route_disconnect, total_weight, oriented_ring)
from .netmodel import NetworkScenario, load_scenario
from .optimize import ESTIMATORS, optimal_server_mean, optimal_server_worst
from .simulate import (SamplerConfig, estimate_all_intersect, estimate_disconnect,
                       estimate_disconnect_sweep, estimate_expected_cost, estimate_intersect_events,
                       estimate_omega, estimate_segment_in)

EXIT_OK, EXIT_COMPUTE, EXIT_USAGE, EXIT_INVALID = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------- helpers


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else format(float(v), ".9g")
    return str(v)


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return None if not math.isfinite(v) else float(format(float(v), ".9g"))
    return v


def render(columns, rows, fmt: str) -> str:
    """Serialise rows (dicts) with a fixed column order."""
    if fmt == "json":
        return json.dumps([{c: _jsonable(r.get(c)) for c in columns} for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def parse_sweep(text: str):
    """``beta=LO:HI:log|lin:N`` -> list of values."""
    try:
        name, spec = text.split("=", 1)
        lo, hi, scale, n = spec.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError as exc:
        raise UsageError(f"bad --sweep {text!r}; expected beta=LO:HI:log|lin:N") from exc
    if name != "beta" or n < 1 or scale not in ("log", "lin"):
        raise UsageError(f"bad --sweep {text!r}; expected beta=LO:HI:log|lin:N")
    if scale == "log":
        if lo <= 0 or hi <= 0:
            raise UsageError("log sweep bounds must be positive")
        return [float(v) for v in np.geomspace(lo, hi, n)]
    return [float(v) for v in np.linspace(lo, hi, n)]


def _ctx(sc: NetworkScenario, args, cfg: SamplerConfig | None = None) -> MeasureContext:
    omega = None
    if not sc.disaster.is_convex:
        # the pose measure of a non-convex area is defined by the sampler
        omega = estimate_omega(sc.disaster, sc.region, cfg or _cfg(args)).estimate
    return MeasureContext(sc.disaster, sc.region, theta_steps=args.theta_steps,
                          surrogate=args.surrogate, omega_override=omega)


def _cfg(args) -> SamplerConfig:
    return SamplerConfig(seed=args.seed, samples=args.samples, workers=args.workers)


def _warn_text(items) -> str:
    return "; ".join(dict.fromkeys(items))


def _try(fn, *a, **kw):
    """Run a closed form, returning (value or None, warning list)."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return fn(*a, **kw), []
    except (AssumptionViolated, ApproximationError, QuakeNetError) as exc:
        return None, [str(exc)]


# ---------------------------------------------------------------- subcommands


def cmd_validate(sc: NetworkScenario, args):
    d = sc.disaster
    rows = [
        {"check": "schema", "subject": "scenario", "ok": True, "detail": ""},
        {"check": "disaster_convex", "subject": "disaster", "ok": d.is_convex,
         "detail": "" if d.is_convex else "closed forms that need convexity are unavailable"},
    ]
    for name in sc.routes:
        poly = sc.route_polyline(name)
        ok = validate_separation(poly, d)
        rows.append({"check": "separation", "subject": name, "ok": ok,
                     "detail": "" if ok else f"non-adjacent pieces within {d.diameter:.6g} km"})
    for name in sc.ring_pairs:
        ok = d.is_convex
        rows.append({"check": "ring_pair", "subject": name, "ok": True,
                     "detail": "" if ok else "ring formulas need a convex disaster area"})
    return ["check", "subject", "ok", "detail"], rows


def cmd_measure(sc: NetworkScenario, args):
    d, reg = sc.disaster, sc.region
    mc = estimate_omega(d, reg, _cfg(args))
    omega = MeasureContext(d, reg).omega if d.is_convex else None
    sur = surrogate_for(d, args.surrogate)
    row = {
        "omega": omega, "omega_mc": mc.estimate, "omega_mc_stderr": mc.stderr,
        "disaster_area": d.area, "disaster_perimeter": d.perimeter, "disaster_diameter": d.diameter,
        "disaster_convex": d.is_convex, "region_area": reg.area, "region_perimeter": reg.perimeter,
        "surrogate": sur.kind, "surrogate_radius": sur.radius if sur.kind == "disk" else None,
        "surrogate_a": sur.a if sur.kind == "rectangle" else None,
        "surrogate_b": sur.b if sur.kind == "rectangle" else None,
        "surrogate_diameter": sur.diameter,
    }
    return list(row), [row]


def cmd_intersect(sc: NetworkScenario, args):
    cfg = _cfg(args)
    ctx = _ctx(sc, args, cfg)
    names = list(sc.routes)
    polys = [sc.route_polyline(n) for n in names]
    mcs = estimate_intersect_events([[p] for p in polys], sc.disaster, sc.region, cfg) if polys else []
    rows = []
    for name, poly, mc in zip(names, polys, mcs):
        closed, warn = (None, ["closed form needs a convex disaster area"])
        method = ""
        if sc.disaster.is_convex:
            closed, warn = _try(prob_route_intersect, poly, ctx)
            if len(poly.coords) == 2:
                method = "segment"
            elif sc.disaster.is_disk and validate_separation(poly, sc.disaster):
                method = "disk-closed"
            else:
                method = "numeric"
        rows.append({"route": name, "length": poly.length, "closed_form": closed, "method": method,
                     "mc": mc.estimate, "mc_stderr": mc.stderr, "accepted": mc.accepted,
                     "samples": mc.samples_used, "warnings": _warn_text(warn)})
    cols = ["route", "length", "closed_form", "method", "mc", "mc_stderr", "accepted", "samples", "warnings"]
    return cols, rows


def _disconnect_rows(sc: NetworkScenario, args, ctx, betas):
    """Rows for every route and ring pair at each failure-rate setting (None = as loaded)."""
    cfg = _cfg(args)
    subjects = [(name, "route", route.s, route.t, list(route.links)) for name, route in sc.routes.items()]
    for name, ring in sc.ring_pairs.items():
        r1, r2 = oriented_ring(ring, sc)
        subjects.append((name, "ring", r1.s, r1.t, list(r1.links + r2.links)))
    rows = []
    for name, kind, s, t, links in subjects:
        mcs = estimate_disconnect_sweep(s, t, sc, cfg, betas, links=links)
        for beta, mc in zip(betas, mcs):
            work = sc if beta is None else sc.with_betas(beta)
            if kind == "route":
                route = work.routes[name]
                gamma = route_failure_count(route, work)
                rec, warn = _try(single_route_disconnect, route, work, ctx)
                closed, approx = (None if rec is None else rec.value), None
                warn += [] if rec is None else list(rec.warnings)
            else:
                r1, r2 = oriented_ring(name, work)
                gamma = ring_failure_count(r1, r2, work)
                res, warn = _try(analyze_ring, name, work, ctx)
                closed = None if res is None else res.exact_estimate
                approx = None if res is None else res.approx_estimate
                warn += [] if res is None else list(res.warnings)
            rows.append({"name": name, "kind": kind, "beta": beta, "gamma": gamma, "closed_form": closed,
                         "approx": approx, "mc": mc.estimate, "mc_stderr": mc.stderr,
                         "warnings": _warn_text(warn)})
    return rows


def cmd_disconnect(sc: NetworkScenario, args):
    ctx = _ctx(sc, args)
    cols = ["name", "kind", "beta", "gamma", "closed_form", "approx", "mc", "mc_stderr", "warnings"]
    betas = parse_sweep(args.sweep) if args.sweep else [None]
    return cols, _disconnect_rows(sc, args, ctx, betas)


def cmd_bounds(sc: NetworkScenario, args):
    cfg = _cfg(args)
    ctx = _ctx(sc, args, cfg)
    rows = []
    for name, ring in sc.ring_pairs.items():
        r1, r2 = oriented_ring(ring, sc)
        s, t = sc.nodes[r1.s].location, sc.nodes[r1.t].location
        (lo_hi, warn) = _try(ring_bounds, s, t, ctx)
        mc = estimate_all_intersect([sc.route_polyline(r1), sc.route_polyline(r2)], sc.disaster, sc.region, cfg)
        rows.append({"ring": name, "s": r1.s, "t": r1.t,
                     "lower": None if lo_hi is None else lo_hi[0], "upper": None if lo_hi is None else lo_hi[1],
                     "mc_both_hit": mc.estimate, "mc_stderr": mc.stderr, "warnings": _warn_text(warn)})
    return ["ring", "s", "t", "lower", "upper", "mc_both_hit", "mc_stderr", "warnings"], rows


def cmd_cost(sc: NetworkScenario, args):
    cfg = _cfg(args)
    ctx = _ctx(sc, args, cfg)
    cost = CostField(default_density=args.density)
    groups = [(name, [name]) for name in sc.routes]
    if len(sc.routes) > 1:
        groups.append(("all", list(sc.routes)))
    rows = []
    for label, names in groups:
        links = list(dict.fromkeys(lid for n in names for lid in sc.routes[n].links))
        rec = expected_additive_cost(names, cost, ctx, scenario=sc)
        mc = estimate_expected_cost([sc.links[lid].path for lid in links], sc.disaster, sc.region, cfg,
                                    densities=[cost.density(lid) for lid in links])
        rows.append({"name": label, "W1": total_weight(names, cost, sc), "expected_cost": rec.value,
                     "mc": mc.estimate, "mc_stderr": mc.stderr})
    return ["name", "W1", "expected_cost", "mc", "mc_stderr"], rows


def cmd_optimize(sc: NetworkScenario, args):
    cfg = _cfg(args)
    ctx = _ctx(sc, args, cfg)
    mean, warn = _try(optimal_server_mean, sc, ctx)
    worst = optimal_server_worst(sc, ctx, args.estimator, cfg)
    rows = []
    for node, row in worst.table.items():
        rows.append({"node": node,
                     "mean_disconnected": None if mean is None else mean.table[node]["mean"],
                     "worst_disconnect": row["worst"], "worst_target": row["worst_target"],
                     "worst_stderr": row.get("worst_stderr"), "estimator": worst.estimator,
                     "best_mean": None if mean is None else node == mean.best_node_mean,
                     "best_worst": node == worst.best_node_worst})
    cols = ["node", "mean_disconnected", "worst_disconnect", "worst_target", "worst_stderr", "estimator",
            "best_mean", "best_worst"]
    return cols, rows


def _parse_event(text: str, sc: NetworkScenario):
    kind, _, rest = text.partition(":")
    if kind == "omega":
        return ("omega",)
    if kind == "intersect":
        return ("all", [rest])
    if kind == "all":
        return ("all", rest.split(","))
    if kind == "disconnect":
        s, _, t = rest.partition(":")
        return ("disconnect", s, t)
    if kind == "segment":
        s, _, t = rest.partition(":")
        return ("segment", s, t)
    raise UsageError(f"unknown event {text!r}")


def cmd_simulate(sc: NetworkScenario, args):
    cfg = _cfg(args)
    events = args.event or (["omega"] + [f"intersect:{n}" for n in sc.routes]
                            + [f"disconnect:{r.s}:{r.t}" for r in sc.routes.values()])
    events = list(dict.fromkeys(events))
    rows = []
    for text in events:
        ev = _parse_event(text, sc)
        try:
            if ev[0] == "omega":
                res = estimate_omega(sc.disaster, sc.region, cfg)
            elif ev[0] == "all":
                res = estimate_all_intersect([sc.route_polyline(n) for n in ev[1]], sc.disaster, sc.region, cfg)
            elif ev[0] == "disconnect":
                res = estimate_disconnect(ev[1], ev[2], sc, cfg)
            else:
                res = estimate_segment_in(sc.nodes[ev[1]].location, sc.nodes[ev[2]].location,
                                          sc.disaster, sc.region, cfg)
        except KeyError as exc:
            raise UsageError(f"event {text!r}: unknown name {exc}") from exc
        rows.append({"event": text, "estimate": res.estimate, "stderr": res.stderr,
                     "samples_used": res.samples_used, "accepted": res.accepted, "seed": res.seed})
    return ["event", "estimate", "stderr", "samples_used", "accepted", "seed"], rows


COMMANDS = {
    "validate": (cmd_validate, "schema, geometry and route separation report"),
    "measure": (cmd_measure, "pose measure, surrogate shape and diameters"),
    "intersect": (cmd_intersect, "probability that each route is hit (closed form and Monte Carlo)"),
    "disconnect": (cmd_disconnect, "disconnection probability per route and ring pair"),
    "bounds": (cmd_bounds, "lower/upper bounds on both ring routes being hit"),
    "cost": (cmd_cost, "expected additive cost inside the disaster area"),
    "optimize": (cmd_optimize, "server placement table"),
    "simulate": (cmd_simulate, "raw Monte Carlo estimates for named events"),
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("scenario_pos", nargs="?", metavar="SCENARIO", help="scenario JSON file")
    common.add_argument("--scenario", help="scenario JSON file")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--samples", type=int, default=10_000)
    common.add_argument("--theta-steps", type=int, default=720)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--surrogate", choices=SURROGATE_MODES, default="auto")
    common.add_argument("--out", help="write the table here and a manifest next to it")

    parser = _Parser(prog="quakenet", description="Network survivability against a randomly placed disaster area.")
    parser.add_argument("--version", action="version", version=f"quakenet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, helptext) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=helptext)
        if name == "disconnect":
            p.add_argument("--sweep", help="uniform link failure rate sweep, e.g. beta=1e-4:1e-1:log:10")
        if name == "cost":
            p.add_argument("--density", type=float, default=1.0, help="cost per km on every link")
        if name == "optimize":
            p.add_argument("--estimator", choices=ESTIMATORS, default="auto")
        if name == "simulate":
            p.add_argument("--event", action="append",
                           help="omega | intersect:ROUTE | all:R1,R2 | disconnect:S:T | segment:U:V")
    return parser


def _error(kind: str, messages, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "messages": list(messages), "exit": code}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        path = args.scenario or args.scenario_pos
        if not path:
            raise UsageError("a scenario file is required")
        env = os.environ.get("QN_WORKERS")
        if env:
            try:
                args.workers = int(env)
            except ValueError as exc:
                raise UsageError(f"QN_WORKERS must be an integer, got {env!r}") from exc
        if args.samples < 1 or args.workers < 1 or args.theta_steps < 8 or not 0 <= args.seed < 2 ** 64:
            raise UsageError("need samples >= 1, workers >= 1, theta-steps >= 8 and 0 <= seed < 2^64")
    except UsageError as exc:
        return _error("usage", [str(exc)], EXIT_USAGE)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    try:
        sc = load_scenario(Path(path))
    except ScenarioError as exc:
        return _error("validation", exc.errors, EXIT_INVALID)
    except OSError as exc:
        return _error("validation", [f"<file>: {exc}"], EXIT_INVALID)

    try:
        columns, rows = COMMANDS[args.command][0](sc, args)
    except UsageError as exc:
        return _error("usage", [str(exc)], EXIT_USAGE)
    except (QuakeNetError, ValueError, KeyError) as exc:
        return _error("computation", [f"{type(exc).__name__}: {exc}"], EXIT_COMPUTE)

    text = render(columns, rows, args.format)
    if args.out:
        out = Path(args.out)
        out.write_text(text)
        manifest = {
            "subcommand": args.command, "scenario": str(path), "seed": args.seed, "samples": args.samples,
            "theta_steps": args.theta_steps, "surrogate": args.surrogate, "workers": args.workers,
            "format": args.format, "version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "outputs": {out.name: hashlib.sha256(text.encode()).hexdigest()},
        }
        Path(f"{out}.manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

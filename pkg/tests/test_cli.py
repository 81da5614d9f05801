import csv
import hashlib
import io
import json
import subprocess
import sys

import pytest

from conftest import SCENARIOS
from quakenet.cli import UsageError, main, parse_sweep
from quakenet.synthetic import ring12_scenario

EXAMPLE1 = str(SCENARIOS / "example1.json")
RING = str(SCENARIOS / "circle_ring.json")

HEADERS = {
    "validate": "check,subject,ok,detail",
    "measure": ("omega,omega_mc,omega_mc_stderr,disaster_area,disaster_perimeter,disaster_diameter,disaster_convex,"
                "region_area,region_perimeter,surrogate,surrogate_radius,surrogate_a,surrogate_b,surrogate_diameter"),
    "intersect": "route,length,closed_form,method,mc,mc_stderr,accepted,samples,warnings",
    "disconnect": "name,kind,beta,gamma,closed_form,approx,mc,mc_stderr,warnings",
    "bounds": "ring,s,t,lower,upper,mc_both_hit,mc_stderr,warnings",
    "cost": "name,W1,expected_cost,mc,mc_stderr",
    "optimize": "node,mean_disconnected,worst_disconnect,worst_target,worst_stderr,estimator,best_mean,best_worst",
    "simulate": "event,estimate,stderr,samples_used,accepted,seed",
}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_measure_example1(capsys):
    code, out, _ = run(capsys, "measure", EXAMPLE1, "--samples", "2000")
    assert code == 0
    row = rows(out)[0]
    assert float(row["omega"]) == pytest.approx(177.653, abs=1e-3)
    assert row["surrogate"] == "disk"


@pytest.mark.parametrize("command", sorted(HEADERS))
def test_headers_are_fixed(capsys, command):
    code, out, err = run(capsys, command, RING, "--samples", "500", "--theta-steps", "16")
    assert code == 0, err
    assert out.splitlines()[0] == HEADERS[command]


def test_nine_significant_digits(capsys):
    _, out, _ = run(capsys, "measure", EXAMPLE1, "--samples", "500")
    assert rows(out)[0]["omega"] == "177.652879"


def test_unknown_flag_is_usage_error(capsys):
    code, out, err = run(capsys, "measure", EXAMPLE1, "--bogus")
    assert code == 2 and out == ""
    record = json.loads(err)
    assert record["error"] == "usage" and record["exit"] == 2


def test_missing_scenario_is_usage_error(capsys):
    assert run(capsys, "measure")[0] == 2


def test_invalid_scenario_exit_3(capsys, tmp_path):
    doc = json.loads(open(EXAMPLE1).read())
    doc["links"][0]["path"][1] = [0.5, 1.0]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 3
    record = json.loads(err)
    assert record["error"] == "validation"
    assert any(m.startswith("links[0].path[1]") for m in record["messages"])
    assert run(capsys, "validate", str(tmp_path / "missing.json"))[0] == 3


def test_computation_error_exit_1(capsys, tmp_path):
    doc = ring12_scenario()
    doc["links"].append({"id": "1-7", "from": "1", "to": "7", "beta": 5e-4})
    path = tmp_path / "mesh.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "optimize", str(path), "--estimator", "closed")
    assert code == 1
    assert json.loads(err)["error"] == "computation"


def test_json_format(capsys):
    code, out, _ = run(capsys, "intersect", EXAMPLE1, "--samples", "4000", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data[0]["route"] == "direct"
    assert data[0]["closed_form"] == pytest.approx(0.181846641, abs=1e-9)


def test_same_seed_same_bytes(capsys):
    first = run(capsys, "disconnect", RING, "--samples", "3000", "--seed", "9")[1]
    second = run(capsys, "disconnect", RING, "--samples", "3000", "--seed", "9")[1]
    other = run(capsys, "disconnect", RING, "--samples", "3000", "--seed", "10")[1]
    assert first == second
    assert first != other


def test_out_writes_manifest(capsys, tmp_path):
    out = tmp_path / "m.csv"
    code, stdout, _ = run(capsys, "measure", EXAMPLE1, "--samples", "500", "--out", str(out))
    assert code == 0 and stdout == ""
    manifest = json.loads((tmp_path / "m.csv.manifest.json").read_text())
    assert manifest["outputs"]["m.csv"] == hashlib.sha256(out.read_bytes()).hexdigest()
    for key in ("subcommand", "scenario", "seed", "samples", "theta_steps", "timestamp", "version"):
        assert key in manifest


def test_scenario_flag_equivalent(capsys):
    a = run(capsys, "bounds", RING, "--samples", "500")[1]
    b = run(capsys, "bounds", "--scenario", RING, "--samples", "500")[1]
    assert a == b


def test_disconnect_sweep(capsys):
    code, out, _ = run(capsys, "disconnect", RING, "--samples", "2000", "--sweep", "beta=1e-4:1e-2:log:3")
    assert code == 0
    table = rows(out)
    upper = [r for r in table if r["name"] == "upper"]
    assert [float(r["beta"]) for r in upper] == pytest.approx([1e-4, 1e-3, 1e-2])
    assert [float(r["closed_form"]) for r in upper] == sorted(float(r["closed_form"]) for r in upper)


def test_bad_sweep():
    assert parse_sweep("beta=1:3:lin:3") == [1.0, 2.0, 3.0]
    for bad in ("alpha=1:2:log:3", "beta=0:1:log:3", "beta=1:2:cubic:3", "beta=1:2"):
        with pytest.raises(UsageError):
            parse_sweep(bad)


def test_workers_env_override(capsys, monkeypatch):
    base = run(capsys, "simulate", RING, "--samples", "40000", "--event", "disconnect:0:6")[1]
    monkeypatch.setenv("QN_WORKERS", "4")
    assert run(capsys, "simulate", RING, "--samples", "40000", "--event", "disconnect:0:6")[1] == base
    monkeypatch.setenv("QN_WORKERS", "many")
    assert run(capsys, "simulate", RING, "--samples", "100")[0] == 2


def test_simulate_events(capsys):
    code, out, _ = run(capsys, "simulate", RING, "--samples", "2000", "--event", "omega",
                       "--event", "all:upper,lower", "--event", "segment:0:3", "--event", "omega")
    assert code == 0
    assert [r["event"] for r in rows(out)] == ["omega", "all:upper,lower", "segment:0:3"]
    assert run(capsys, "simulate", RING, "--event", "nonsense")[0] == 2
    assert run(capsys, "simulate", RING, "--event", "intersect:nowhere")[0] == 2


def test_validate_reports_separation(capsys):
    code, out, _ = run(capsys, "validate", str(SCENARIOS / "zigzag.json"))
    assert code == 0
    checks = {(r["check"], r["subject"]): r["ok"] for r in rows(out)}
    assert checks[("separation", "folded")] == "true"


def test_non_convex_scenario_runs(capsys):
    for command in ("measure", "intersect", "cost", "disconnect", "optimize"):
        code, _, err = run(capsys, command, str(SCENARIOS / "multipart.json"), "--samples", "2000")
        assert code == 0, (command, err)


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "quakenet.cli", "measure", EXAMPLE1, "--samples", "500"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.splitlines()[0] == HEADERS["measure"]

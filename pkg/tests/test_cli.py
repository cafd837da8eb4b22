import io
import json
import subprocess
import sys

import pytest

from hcif.cli import main
from hcif.gen import random_model_text
from hcif.syntax import format_model, load_model, parse
from hcif.trace import read_sigma

from conftest import model_path
from oracles import LN2, LN4


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_flatten_round_trip(tmp_path, capsys):
    out = tmp_path / "flat.hcif"
    code, _, _ = run(capsys, "flatten", model_path("thermostat_hier"), "-o", out)
    assert code == 0
    flat = load_model(out)
    assert flat.comp.location_names == ("Off", "On.Cold", "On.Hot")
    assert parse(format_model(flat)) == flat


def test_flatten_to_stdout_keeping_dead_edges(capsys):
    code, out, _ = run(capsys, "flatten", model_path("thermostat_hier"), "--keep-dead-edges")
    assert code == 0 and out.count("edge ") == 5


def test_bisim_exit_codes(tmp_path, capsys):
    code, out, _ = run(capsys, "bisim", model_path("thermostat_hier"), model_path("thermostat_flat"))
    assert code == 0 and out.startswith("equivalent")
    mutated = model_path("thermostat_flat").read_text().replace("Delta <= c", "Delta < c")
    bad = tmp_path / "bad.hcif"
    bad.write_text(mutated)
    code, out, _ = run(capsys, "bisim", model_path("thermostat_hier"), bad, "--depth", "4")
    assert code == 2 and out.startswith("distinguished")


def test_bisim_with_sigma_file(tmp_path, capsys):
    sigma = tmp_path / "sigma.txt"
    sigma.write_text("T = 18  # already cold\nn = 0\n")
    assert read_sigma(sigma) == {"T": 18.0, "n": 0.0}
    code, _, _ = run(
        capsys, "bisim", model_path("thermostat_hier"), model_path("thermostat_flat"), "--sigma", sigma, "--depth", "3"
    )
    assert code == 0
    js = tmp_path / "sigma.json"
    js.write_text(json.dumps({"T": 30}))
    assert read_sigma(js) == {"T": 30.0}


def test_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.hcif"
    bad.write_text("automaton A { location X { sub } }")
    code, _, err = run(capsys, "flatten", bad)
    assert code == 1 and f"{bad}:1:" in err
    bad.write_text("automaton A { location X { init z = 1 } }")
    code, _, err = run(capsys, "simulate", bad)
    assert code == 1 and "undeclared" in err
    code, _, err = run(capsys, "simulate", tmp_path / "missing.hcif")
    assert code == 1
    code, _, err = run(capsys, "bisim", model_path("thermostat"), model_path("thermostat_hier"))
    assert code == 1 and "different variables" in err


def _records(text):
    return [json.loads(line) for line in text.splitlines()]


def test_simulate_is_deterministic_and_chains(capsys):
    args = ("simulate", model_path("thermostat_hier"), "--steps", "25", "--seed", "11")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second
    records = _records(first)
    assert len(records) == 25
    for k, (a, b) in enumerate(zip(records, records[1:])):
        assert a["step"] == k
        assert a["post"] == b["pre"]
    kinds = {r["kind"] for r in records}
    assert kinds <= {"action", "env", "time"}
    _, other, _ = run(capsys, "simulate", model_path("thermostat_hier"), "--steps", "25", "--seed", "12")
    assert other != first


def test_simulate_time_payload(capsys):
    code, out, _ = run(
        capsys, "simulate", model_path("thermostat"), "--steps", "3", "--durations", "0.5", "--delta", "0.25", "--seed", "0"
    )
    assert code == 0
    for r in _records(out):
        if r["kind"] == "time":
            samples = r["label"]["samples"]
            assert [s["s"] for s in samples] == [0.0, 0.25, 0.5]
            assert samples[0]["rho"] == r["pre"]["valuation"]
            assert samples[-1]["rho"] == r["post"]["valuation"]


def test_simulate_interactive(monkeypatch, capsys):
    monkeypatch.setattr(sys, "stdin", io.StringIO("x\n0\n0\nq\n"))
    code, out, err = run(capsys, "simulate", model_path("thermostat"), "--interactive", "--durations", "0.5")
    assert code == 0
    assert len(_records(out)) == 2
    assert "[0]" in err and "select index" in err


def test_hcif_delta_environment(monkeypatch, capsys):
    monkeypatch.setenv("HCIF_DELTA", "0.25")
    code, out, _ = run(capsys, "enabled-at", model_path("example2"), "--horizon", "1")
    assert code == 0 and len(out.splitlines()) == 5
    monkeypatch.setenv("HCIF_DELTA", "fast")
    code, _, err = run(capsys, "enabled-at", model_path("example2"), "--horizon", "1")
    assert code == 1 and "HCIF_DELTA" in err


def test_enabled_at_example2(tmp_path, capsys):
    png = tmp_path / "theta.png"
    code, out, _ = run(capsys, "enabled-at", model_path("example2"), "--horizon", "2", "--plot", png)
    assert code == 0
    rows = _records(out)
    assert len(rows) == 65
    for row in rows:
        assert "a" in row["theta"]
        assert ("b" in row["theta"]) == (LN2 < row["s"] < LN4)
    assert png.stat().st_size > 1000


def test_enabled_at_rejects_off_grid_horizon(capsys):
    code, _, err = run(capsys, "enabled-at", model_path("example2"), "--horizon", "0.1")
    assert code == 1 and "multiple" in err


def test_export_dot(capsys):
    code, out, _ = run(capsys, "export-dot", model_path("thermostat_hier"))
    assert code == 0
    assert out.startswith('digraph "thermostat_hier"') and "compound=true" in out
    assert out.count("subgraph cluster_aut") == 2
    assert out.count("subgraph cluster_loc") == 1
    assert "lhead=cluster_loc" in out


def test_console_script(tmp_path):
    path = tmp_path / "m.hcif"
    path.write_text(random_model_text(5))
    proc = subprocess.run(
        [sys.executable, "-m", "hcif.cli", "flatten", str(path)], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert parse(proc.stdout).comp is not None


@pytest.mark.parametrize("name", ["thermostat", "thermostat_hier", "example1"])
def test_simulate_every_bundled_model(name, capsys):
    code, out, _ = run(capsys, "simulate", model_path(name), "--steps", "10", "--seed", "3")
    assert code == 0 and out

import math
from pathlib import Path

import pytest

import vanet_topo as vt

ROOT = Path(__file__).resolve().parents[2]
BUNDLED = ROOT / "scenarios" / "grid4x4.conf"

SMALL = """
[scenario]
steps = 12
seed = 3

[mobility]
grid_rows = 3
grid_columns = 3

[rsu]
count = 2

[experiment]
warmup_steps = 2
"""


def test_adaptability_example():
    a = vt.VehicleState("a", 0.0, 0.0, 10.0, 0.0)
    b = vt.VehicleState("b", 0.0, 0.0, 20.0, math.pi / 2)
    assert vt.link_adaptability(a, b, 0.7) == pytest.approx(0.35, rel=1e-9)


def test_complexity_and_mode():
    assert vt.complexity(60, 0.2) == pytest.approx(0.8, rel=1e-9)
    assert vt.select_mode(8, 0.2) == "exact"
    assert vt.select_mode(200, 0.5) == "heuristic"


def test_bundled_config_loads():
    c = vt.load_config(str(BUNDLED))
    assert c.steps == 500
    assert c.seed == 42
    assert c.algorithm == vt.Algorithm.hierarchical
    assert "scenario.steps" in vt.config_keys()


def test_config_errors_are_typed():
    with pytest.raises(vt.ConfigError):
        vt.parse_config("[scenario]\nstepz = 4\n")
    assert issubclass(vt.ConfigError, vt.VanetError)


def test_trace_round_trip():
    xml = """<fcd-export>
  <timestep time="0.00"><vehicle id="a" x="0" y="0" angle="90" speed="5"/></timestep>
  <timestep time="1.00"><vehicle id="a" x="5" y="0" angle="90" speed="5"/></timestep>
</fcd-export>"""
    snaps = vt.parse_trace(xml, "fcd_xml")
    assert len(snaps) == 2
    assert snaps[1].vehicles[0].x == 5.0
    back = vt.parse_trace(vt.write_csv_trace(snaps), "csv")
    assert back == snaps


def test_run_experiment_small():
    c = vt.parse_config(SMALL)
    snaps = vt.build_scenario(c)
    assert vt.runnable_steps(c, len(snaps)) == 12
    out = vt.run_experiment(c, snaps)
    assert out["algorithm"] == "hierarchical"
    assert len(out["steps"]) == 12
    assert out["summary"]["records"] == 12
    for rec in out["steps"]:
        assert rec["l_avg"] >= 0.0
        assert 0.0 <= rec["connectivity_rate"] <= 1.0
    again = vt.run_experiment(c, snaps)
    assert again == out


def test_compare_writes_files(tmp_path):
    c = vt.parse_config(SMALL)
    results = vt.compare(c, str(tmp_path), 1)
    assert {r["algorithm"] for r in results} == {"hierarchical", "greedy", "shortest_path", "motif"}
    assert (tmp_path / "summary.csv").exists()
    assert (tmp_path / "greedy_metrics.csv").read_text().count("\n") == 13

import csv
import json
import math
import subprocess
import sys

import pytest

from tvrepair.cli import main, parse_grid
from tvrepair.errors import InvalidParameter

from conftest import ADULT

COARSE = ["--bins", "hours-per-week=uniform(1, 99, 2)", "--bins", "education-num=uniform(1, 17, 4)"]


def run(*argv):
    return main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_grid_parsing():
    grid = parse_grid("0:0.02:0.2", 0, 1)
    assert len(grid) == 11 and grid[0] == 0.0 and grid[-1] == 0.2
    assert grid[3] == 0.06
    assert parse_grid("0:0.1:0.35") == [0.0, 0.1, 0.2, 0.3]
    assert parse_grid("0.5") == [0.5]
    for bad in ("a:b:c", "0:0:1", "1:0.1:0", "0:1"):
        with pytest.raises(InvalidParameter):
            parse_grid(bad)
    with pytest.raises(InvalidParameter):
        parse_grid("0:0.5:1.5", 0, 1)


def test_usage_errors_exit_2(capsys):
    assert run("bogus") == 2
    assert "usage" in capsys.readouterr().err
    assert run() == 2
    assert run("apply", "--input", "x.json") == 2          # --plan is required
    assert run("apply", "--input", "x", "--plan", "p", "--seed", "-1") == 2


def test_domain_errors_exit_1_and_write_nothing(tmp_path, capsys):
    out = tmp_path / "out"
    assert run("repair", "--input", ADULT, "--rho", "1.5", "--out", out) == 1
    assert "InvalidParameter" in capsys.readouterr().err
    assert run("ingest", "--input", tmp_path / "missing.csv", "--out", out) == 1
    assert "IoError" in capsys.readouterr().err
    assert run("dp-bounds", "--eps=-1:1:2", "--out", out) == 1
    assert not out.exists()


def test_dp_bounds_table(tmp_path):
    assert run("dp-bounds", "--eps", "0:0.1:5", "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "dp_bounds.csv")
    assert len(rows) == 51
    for r in rows:
        eps = float(r["epsilon"])
        assert float(r["fairness_bound"]) == pytest.approx(1 - math.exp(-eps), abs=1e-12)
        assert float(r["utility_bound"]) == pytest.approx(math.exp(-eps), abs=1e-12)
    assert run("dp-bounds", "--eps", "1", "--out", tmp_path, "--format", "json") == 0
    assert json.loads((tmp_path / "dp_bounds.json").read_text())[0]["epsilon"] == 1.0


def test_pipeline_on_coarse_census(tmp_path):
    out = tmp_path / "o"
    assert run("ingest", "--input", ADULT, *COARSE, "--out", out) == 0
    ds = out / "ingest_dataset.json"
    assert run("repair", "--input", ds, "--rho", "0", "--out", out) == 0
    plan = json.loads((out / "repair_plan_rho0.json").read_text())
    assert plan["parity_gap"] <= 1e-6
    assert run("sweep", "--input", ds, "--rhos", "0:0.05:0.2", "--out", out) == 0
    objectives = [float(r["objective"]) for r in read_csv(out / "sweep.csv")]
    assert len(objectives) == 5
    assert all(b <= a + 1e-7 for a, b in zip(objectives, objectives[1:]))
    assert run("apply", "--input", ds, "--plan", out / "repair_plan_rho0.json", "--seed", "9",
               "--out", out) == 0
    repaired = json.loads((out / "apply_seed9.json").read_text())
    original = json.loads(ds.read_text())
    assert len(repaired["entries"]) == len(original["entries"])
    assert run("histogram", "--input", ds, "--plan", out / "repair_plan_rho0.json", "--out", out) == 0
    for stage in ("original", "repaired"):
        for s in (0, 1):
            rows = read_csv(out / f"histogram_hours-per-week_s{s}_{stage}.csv")
            assert sum(float(r["probability"]) for r in rows) == pytest.approx(1.0, abs=1e-12)
    assert run("barycenter", "--input", ds, "--out", out) == 0
    values = json.loads((out / "barycenter_value.json").read_text())
    assert values["value"] == pytest.approx(values["closed_form"], abs=1e-8)
    assert not list(out.glob(".*.tmp"))


def test_repeated_runs_are_byte_identical(tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        assert run("repair", "--input", ADULT, *COARSE, "--rho", "0.05", "--out", d) == 0
        assert run("sweep", "--input", ADULT, *COARSE, "--rhos", "0:0.1:0.2", "--out", d) == 0
        assert run("apply", "--input", ADULT, *COARSE, "--plan", d / "repair_plan_rho0.05.json",
                   "--seed", "77", "--out", d) == 0
    names = sorted(p.name for p in dirs[0].iterdir())
    assert names == ["apply_seed77.json", "repair_plan_rho0.05.json", "sweep.csv"]
    for name in names:
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()


def test_verify_reports(tmp_path, capsys):
    assert run("verify", "--seed", "1", "--trials", "10", "--out", tmp_path) == 0
    lines = capsys.readouterr().out.splitlines()
    assert sum(line.startswith("PASS") for line in lines) == 5
    rows = read_csv(tmp_path / "verify.csv")
    assert [r["asserted"] for r in rows].count("False") == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "tvrepair", "dp-bounds", "--eps", "0:1:2",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "dp_bounds.csv").exists()


@pytest.mark.slow
def test_census_repair_at_zero_budget(tmp_path):
    assert run("repair", "--input", ADULT, "--rho", "0", "--out", tmp_path) == 0
    plan = json.loads((tmp_path / "repair_plan_rho0.json").read_text())
    assert plan["parity_gap"] <= 1e-6
    assert len(plan["channel_0"]["mass"]) == 128

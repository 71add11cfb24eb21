import csv
import json
import subprocess
import sys

import pytest
from click.testing import CliRunner

from hypoflow.cli import EXIT_NEGATIVE, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, cli

STD = "omega1 = e12 + e34\npsi2 = e135 + e425\npsi3 = e145 + e235\n"
SWAP = "omega1 = e12 + e34\npsi2 = e145 + e235\npsi3 = e135 + e425\n"


@pytest.fixture
def run(tmp_path):
    runner = CliRunner()

    def _run(*args):
        return runner.invoke(cli, [str(a) for a in args], catch_exceptions=False)
    return _run


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


# -- validate -----------------------------------------------------------------

def test_validate_accept(run, tmp_path):
    f = _write(tmp_path, "std.txt", STD)
    r = run("validate", f, "--out", tmp_path / "o")
    assert r.exit_code == EXIT_OK
    assert "accept" in r.output and "omega2 = 1*e13 - 1*e24" in r.output
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["accepted"] and rep["alpha"] == [0, 0, 0, 0, 1]


def test_validate_reject(run, tmp_path):
    r = run("validate", _write(tmp_path, "swap.txt", SWAP))
    assert r.exit_code == EXIT_NEGATIVE
    assert "reject" in r.output and "[FAIL] omega1(Y,Z) >= 0 on L" in r.output


def test_validate_parse_error(run, tmp_path):
    r = run("validate", _write(tmp_path, "bad.txt", "omega1 = e12 + e34 +\n"))
    assert r.exit_code == EXIT_USAGE
    assert "bad.txt:1:" in r.output


# -- classify -------------------------------------------------------------------

@pytest.mark.parametrize("args, code, needle", [
    (["--family", "m3", "--params", "1,2"], EXIT_OK, "A = -27/16"),
    (["--d", "(0,0,0,0,0)"], EXIT_OK, "class: abelian"),
    (["--family", "m1", "--params", "1,0,0,1"], EXIT_OK, "class: (0,0,12,13,14)"),
    (["--d", "(0,0,0,0,15)"], EXIT_NEGATIVE, "negative"),
    (["--d", "(0,0,0,12,45)"], EXIT_NEGATIVE, "negative"),
    (["--d", "(0,0,0,12)"], EXIT_USAGE, ""),
    (["--family", "m1", "--params", "0,0,0,1"], EXIT_NEGATIVE, "unclassified"),
])
def test_classify(run, args, code, needle):
    r = run("classify", *args)
    assert r.exit_code == code, r.output
    assert needle in r.output


def test_classify_finds_family_from_d(run, tmp_path):
    r = run("classify", "--d", "(0,0,0,0,3*12-1*34)", "--out", tmp_path)
    assert r.exit_code == EXIT_OK
    rep = json.loads((tmp_path / "classify.json").read_text())
    assert rep["iso_class"] == "(0,0,0,0,12+34)"
    assert any(o["family"] == "m3" and o["params"] == ["1", "2"] for o in rep["orbits"])


def test_classify_usage(run):
    assert run("classify").exit_code == EXIT_USAGE
    assert run("classify", "--family", "m3").exit_code == EXIT_USAGE


# -- evolve ----------------------------------------------------------------------

def test_evolve_outputs_and_determinism(run, tmp_path):
    args = ("evolve", "--family", "m1", "--params", "0.3,0.8,0.5,0.6", "--tspan", "0:0.5")
    r1 = run(*args, "--out", tmp_path / "a")
    r2 = run(*args, "--out", tmp_path / "b")
    assert r1.exit_code == r2.exit_code == EXIT_OK
    for name in ("trajectory.json", "trajectory.csv", "drift.json", "plot_lambda.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    data = json.loads((tmp_path / "a" / "trajectory.json").read_text())
    assert data["run_config"]["command"] == "evolve" and not data["blowup"]
    assert max(data["drift"].values()) < 1e-7
    with open(tmp_path / "a" / "trajectory.csv") as fh:
        assert fh.readline().startswith("# run_config")
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(data["samples"])


def test_evolve_blowup(run, tmp_path):
    r = run("evolve", "--family", "m2", "--params", "0,1,0,1,0,1", "--out", tmp_path, "--format", "json")
    assert r.exit_code == EXIT_OK
    assert "blow-up flagged near t=0.33333333" in r.output
    assert not (tmp_path / "trajectory.csv").exists()


def test_evolve_partial_on_budget(run, tmp_path):
    r = run("evolve", "--family", "m1", "--params", "0.3,0.8,0.5,0.6", "--max-steps", "3",
            "--out", tmp_path, "--no-plot-data")
    assert r.exit_code == EXIT_NUMERIC
    data = json.loads((tmp_path / "trajectory.json").read_text())
    assert len(data["samples"]) == 4 and data["stats"]["status"] == "step budget exhausted"
    assert not list(tmp_path.glob("plot_*.csv"))


@pytest.mark.parametrize("args", [
    ["--params", "1,2,3"], ["--params", "1,x"], ["--tspan", "0-1"], ["--rtol", "0"],
])
def test_evolve_bad_input(run, tmp_path, args):
    base = {"--params": "1,2", "--tspan": "0:0.01"}
    merged = {**base, **dict(zip(args[::2], args[1::2]))}
    flat = [x for kv in merged.items() for x in kv]
    assert run("evolve", "--family", "m3", *flat, "--out", tmp_path).exit_code == EXIT_USAGE


# -- holonomy --------------------------------------------------------------------------

def test_holonomy_point(run):
    r = run("holonomy", "--family", "m3", "--params", "1,2")
    assert r.exit_code == EXIT_OK and "rank 8" in r.output


def test_holonomy_sweep(run, tmp_path, monkeypatch):
    monkeypatch.setenv("HYPOFLOW_THREADS", "2")
    r = run("holonomy", "--family", "m3", "--sweep", "lambda=-3:3:13", "--sweep", "mu=-3:3:13",
            "--out", tmp_path)
    assert r.exit_code == EXIT_OK
    assert "agreement with rank of the eight generators < 8: 169/169" in r.output
    with open(tmp_path / "holonomy_sweep.csv") as fh:
        fh.readline()
        rows = list(csv.DictReader(fh))
    assert len(rows) == 169
    assert set(rows[0]) >= {"lambda", "mu", "rank", "reducible_by_rank", "reducible_stated"}


def test_holonomy_trajectory(run, tmp_path):
    run("evolve", "--family", "m3", "--params", "1,2", "--tspan", "0:0.02", "--out", tmp_path)
    r = run("holonomy", "--trajectory", tmp_path / "trajectory.json", "--every", "2", "--out", tmp_path)
    assert r.exit_code == EXIT_OK
    data = json.loads((tmp_path / "holonomy.json").read_text())
    assert all(s["rank"] == 8 for s in data["samples"])


def test_holonomy_usage(run):
    assert run("holonomy").exit_code == EXIT_USAGE
    assert run("holonomy", "--family", "m3", "--sweep", "nu=0:1:3").exit_code == EXIT_USAGE
    assert run("holonomy", "--sweep", "mu=0:1:3").exit_code == EXIT_USAGE


# -- verify ------------------------------------------------------------------------------

def test_verify_all(run, tmp_path):
    r = run("verify", "all", "--seed", "3", "--out", tmp_path)
    assert r.exit_code == EXIT_OK and "FAIL" not in r.output
    data = json.loads((tmp_path / "verify_all.json").read_text())
    assert data["seed"] == 3 and all(c["passed"] for c in data["checks"])


def test_verify_unknown_suite(run):
    assert run("verify", "nope").exit_code == EXIT_USAGE


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "hypoflow", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "hypoflow" in out.stdout

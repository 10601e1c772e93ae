import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from wavemap import cli


def _header(path):
    with open(path) as fh:
        return next(csv.reader(fh))


def test_no_verb_is_usage_error(capsys):
    assert cli.main([]) == cli.EXIT_USAGE


def test_unknown_verb_prints_help(capsys):
    assert cli.main(["bogus"]) == cli.EXIT_USAGE
    err = capsys.readouterr().err
    assert "usage:" in err and "usage error" in err


def test_bad_flag_value(tmp_path):
    assert cli.main(["law", "--lambda0", "abc", "--out", str(tmp_path / "x")]) == cli.EXIT_USAGE


def test_selftest_passes(capsys):
    assert cli.main(["selftest"]) == cli.EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert [l.split()[1].rstrip(":") for l in lines] == [
        "moment_integrals", "wronskian", "g_functional_equation", "I_alpha0"]
    assert all(l.startswith("PASS") for l in lines)


def test_selftest_failure_exit_code(monkeypatch, capsys):
    monkeypatch.setattr(cli, "selftest_checks", lambda: [("x", True, ""), ("y", False, "bad")])
    assert cli.main(["selftest"]) == cli.EXIT_CHECK
    assert "FAIL y" in capsys.readouterr().out


def test_law_outputs_and_sidecar(tmp_path):
    pre = str(tmp_path / "law")
    assert cli.main(["law", "--stop-ratio", "1e-4", "--out", pre, "--plot-script"]) == 0
    assert _header(pre + "_trajectory.csv") == ["t", "lambda", "lambda_dot", "mu", "E"]
    const = json.load(open(pre + "_constants.json"))
    assert set(const) == {"a", "c", "t_star", "b"}
    cfg = json.load(open(pre + "_config.json"))
    assert cfg["lambda0"] == 1.0 and cfg["lambda_dot0"] == -0.1 and cfg["a"] == 0.146
    assert cfg["stop_ratio"] == 1e-4 and "version" in cfg
    assert (tmp_path / "law.gp").exists()


def test_law_byte_identical(tmp_path):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    for p in (a, b):
        assert cli.main(["law", "--stop-ratio", "1e-4", "--out", p]) == 0
    for suffix in ("_trajectory.csv", "_constants.json"):
        assert open(a + suffix, "rb").read() == open(b + suffix, "rb").read()


def test_csv_floats_round_trip(tmp_path):
    pre = str(tmp_path / "law")
    cli.main(["law", "--stop-ratio", "1e-3", "--out", pre])
    with open(pre + "_trajectory.csv") as fh:
        next(fh)
        first = fh.readline().strip().split(",")
    assert float(first[1]) == 1.0
    assert all(float(format(float(s), ".17g")) == float(s) for s in first)


def test_coords_dump(tmp_path):
    pre = str(tmp_path / "c")
    assert cli.main(["coords", "dump", "--n", "50", "--out", pre]) == 0
    assert _header(pre + "_coords.csv") == ["x", "y", "branch", "chi", "chi_combo", "A", "X", "Z", "Ycap"]
    with open(pre + "_coords.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 50
    assert {r["branch"] for r in rows} <= {"lower", "upper"}
    x = np.array([float(r["x"]) for r in rows])
    assert np.all(np.diff(x) > 0)
    cfg = json.load(open(pre + "_config.json"))
    assert cfg["admissible"] is True and cfg["x_cr"] > 0


def test_psi_dump(tmp_path):
    pre = str(tmp_path / "p")
    assert cli.main(["psi", "dump", "--n", "40", "--out", pre]) == 0
    assert _header(pre + "_psi.csv") == ["x", "y", "psi", "psi1", "psi2"]
    cfg = json.load(open(pre + "_config.json"))
    assert cfg["state"]["mu"] > 0


def test_search_scan_schema_and_threads(tmp_path):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    args = ["search", "scan", "--alphas", "0,0.5", "--betas", "0.3:0.9:3"]
    assert cli.main(args + ["--threads", "1", "--out", a]) == 0
    assert cli.main(args + ["--threads", "3", "--out", b]) == 0
    assert _header(a + "_scan.csv") == ["alpha", "beta", "mu", "I1", "I2", "I"]
    assert open(a + "_scan.csv", "rb").read() == open(b + "_scan.csv", "rb").read()
    d = np.loadtxt(a + "_scan.csv", delimiter=",", skiprows=1)
    assert d.shape == (6, 6)


def test_search_curve_schema(tmp_path):
    pre = str(tmp_path / "c")
    assert cli.main(["search", "curve", "--betas", "0.5,1.0", "--samples", "11", "--out", pre]) == 0
    assert _header(pre + "_curve.csv") == ["beta", "alpha_lower", "alpha_upper"]
    assert json.load(open(pre + "_config.json"))["root_counts"] == [0, 0]


def test_search_wedge_reports_failure(tmp_path, capsys):
    pre = str(tmp_path / "w")
    assert cli.main(["search", "wedge", "--out", pre]) == cli.EXIT_FAIL
    w = json.load(open(pre + "_wedge.json"))
    assert w["alpha0"] is None and set(w["tolerances"]) == {"beta0", "alpha0", "a"}
    assert "diagnostics" in w
    assert "no zero" in capsys.readouterr().err


def test_search_wedge_success_json(tmp_path, monkeypatch):
    from wavemap import param_search
    monkeypatch.setattr(param_search, "find_wedge", lambda **kw: param_search.WedgePoint(0.654, 1.04))
    pre = str(tmp_path / "w")
    assert cli.main(["search", "wedge", "--out", pre]) == 0
    w = json.load(open(pre + "_wedge.json"))
    assert w["a"] == pytest.approx(1.04 ** 2 * np.exp(-2), rel=1e-15)


@pytest.fixture(scope="module")
def fig1_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("fig1")
    pre = str(d / "f")
    rc = cli.main(["fig1", "--N", "2048", "--out", pre, "--plot-script"])
    return rc, pre


def test_fig1_outputs(fig1_run):
    rc, pre = fig1_run
    assert rc == 0
    assert _header(pre + "_series.csv") == ["t", "lambda", "lambda_alt", "energy", "charge"]
    assert _header(pre + "_fig1.csv") == ["x", "y", "y_analytic"]
    fit = json.load(open(pre + "_fit.json"))
    assert fit["rms_residual"] < 0.05
    cfg = json.load(open(pre + "_config.json"))
    assert cfg["fit"]["t_star"] == fit["t_star"] and cfg["stop_reason"] == "resolution"


def test_simulate_byte_identical(fig1_run, tmp_path):
    _, pre = fig1_run
    other = str(tmp_path / "g")
    assert cli.main(["simulate", "--N", "2048", "--out", other]) == 0
    for suffix in ("_series.csv", "_fit.json", "_fig1.csv"):
        assert open(pre + suffix, "rb").read() == open(other + suffix, "rb").read()


def test_fig1_rejects_poly(tmp_path):
    assert cli.main(["fig1", "--model", "poly", "--out", str(tmp_path / "x")]) == cli.EXIT_USAGE


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "wavemap", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()

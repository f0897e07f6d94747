import csv
import json
import subprocess
import sys

import pytest

from thermolab import __version__, acceptance
from thermolab.cli import EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK, EXIT_SELFTEST, main
from thermolab.config import config_hash, load

S1 = """
name = "flat cos theta"
[intensity]
terms = [[1, "cos", 0, 0, "cc", 1.0]]
[gauge]
kind = "scaled"
factor = 1.0
[curvature_scan]
grid = [8, 8, 16]
[hopf]
grid = [8, 8, 8]
"""

S2 = """
seed = 4
[intensity]
terms = [[2, "cos", 0, 0, "cc", 1.0]]
[gauge]
kind = "scaled"
factor = 0.5
[orbit]
initial = [0.0, 0.0, 0.3]
t_max = 5.0
samples = 11
[cocycle]
initial = [0.0, 0.0, 0.3]
t_min = -3.0
t_max = 3.0
samples = 7
[conjugate_scan]
count = 3
t_max = 10.0
[green_scan]
grid = [2, 2, 2]
[lyapunov]
initial = [0.0, 0.0, 0.3]
covector = [1.0, 0.0]
t_max = 20.0
[domination]
samples = 2
t_max = 20
"""


@pytest.fixture
def cfg(tmp_path):
    def make(text, name="cfg.toml"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return make


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def run(*args):
    return main([str(a) for a in args])


def test_orbit_csv_and_summary(cfg, tmp_path):
    out = tmp_path / "o"
    assert run("orbit", "--config", cfg(S2), "--out", out) == EXIT_OK
    header, rows = read_csv(out / "orbit.csv")
    assert header == ["t", "x", "y", "theta", "lambda", "V_lambda", "kappa_p", "big_k", "kappa_tilde"]
    assert len(rows) == 11
    for row in rows:
        assert float(row[-1]) == pytest.approx(-1.0, abs=1e-12)  # damped curvature on S2
        for cell in row:
            assert repr(float(cell)) == repr(float(format(float(cell), ".17g")))
    summary = json.loads((out / "orbit.json").read_text())
    assert summary["version"] == __version__
    assert summary["command"] == "orbit"
    assert summary["config_hash"] == config_hash(summary["config"])


def test_rerun_from_summary_reproduces_bytes(cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("orbit", "--config", cfg(S2), "--out", a) == EXIT_OK
    assert run("orbit", "--config", a / "orbit.json", "--out", b) == EXIT_OK
    assert (a / "orbit.csv").read_bytes() == (b / "orbit.csv").read_bytes()
    assert load(str(a / "orbit.json")) == load(cfg(S2))


def test_cocycle_columns(cfg, tmp_path):
    assert run("cocycle", "--config", cfg(S2), "--out", tmp_path) == EXIT_OK
    header, rows = read_csv(tmp_path / "cocycle.csv")
    assert header == ["t", "x_c", "y_c", "z", "m", "det_Gamma"]
    for t, x, y, z, m, det in (map(float, r) for r in rows):
        assert det == pytest.approx(1.0, abs=1e-8)
        assert z * m == pytest.approx(y, rel=1e-7)


def test_curvature_scan_cos_theta(cfg, tmp_path):
    assert run("curvature-scan", "--config", cfg(S1), "--out", tmp_path) == EXIT_OK
    res = json.loads((tmp_path / "curvature-scan.json").read_text())["results"]
    assert res["max_abs_kappa_p"] < 1e-12
    assert res["max_abs_big_k"] < 1e-12
    assert res["max_kappa_tilde"] == pytest.approx(0.5)


def test_hopf(cfg, tmp_path):
    assert run("hopf", "--config", cfg(S1), "--out", tmp_path) == EXIT_OK
    res = json.loads((tmp_path / "hopf.json").read_text())["results"]
    assert abs(res["int_kappa_p"]) < 1e-10 and abs(res["margin"]) < 1e-10


def test_scans_and_exponents(cfg, tmp_path):
    path = cfg(S2)
    for cmd in ("conjugate-scan", "green-scan", "lyapunov", "domination"):
        assert run(cmd, "--config", path, "--out", tmp_path) == EXIT_OK
    green = json.loads((tmp_path / "green-scan.json").read_text())["results"]
    assert green["min_gap"] == pytest.approx(2.0, abs=1e-6) and green["nonconverged"] == 0
    header, rows = read_csv(tmp_path / "green.csv")
    assert len(rows) == 8 and header[:5] == ["x", "y", "theta", "r_s", "r_u"]
    dom = json.loads((tmp_path / "domination.json").read_text())["results"]
    assert dom["slope"] == pytest.approx(-2.0, abs=0.1)
    conj = json.loads((tmp_path / "conjugate-scan.json").read_text())["results"]
    assert conj["detections"] == 0
    _, rows = read_csv(tmp_path / "lyapunov.csv")
    assert [r[0] for r in rows] == ["unstable", "stable", "covector"]
    # the sanitised summary still parses as strict JSON
    json.loads((tmp_path / "lyapunov.json").read_text(), parse_constant=pytest.fail)


def test_worker_count_and_seed(cfg, tmp_path, monkeypatch):
    path = cfg(S2)
    run("conjugate-scan", "--config", path, "--out", tmp_path / "w1", "--workers", 1)
    run("conjugate-scan", "--config", path, "--out", tmp_path / "w2", "--workers", 2)
    one = (tmp_path / "w1" / "conjugate.csv").read_bytes()
    assert one == (tmp_path / "w2" / "conjugate.csv").read_bytes()
    monkeypatch.setenv("THERMOLAB_WORKERS", "2")
    run("conjugate-scan", "--config", path, "--out", tmp_path / "env")
    assert one == (tmp_path / "env" / "conjugate.csv").read_bytes()
    run("conjugate-scan", "--config", path, "--out", tmp_path / "s", "--seed", 99)
    assert one != (tmp_path / "s" / "conjugate.csv").read_bytes()
    summary = json.loads((tmp_path / "s" / "conjugate-scan.json").read_text())
    assert summary["config"]["seed"] == 99


def test_negative_rel_tol_is_a_validation_error(cfg, tmp_path, capsys):
    code = run("orbit", "--config", cfg("[integrator]\nrel_tol = -1e-9\n"), "--out", tmp_path)
    assert code == EXIT_INVALID
    assert "integrator.rel_tol" in capsys.readouterr().err


@pytest.mark.parametrize("args", [["orbit", "--config", "/nonexistent.toml"],
                                  ["orbit", "--workers", "0"], ["conjugate-scan", "--seed", "-1"]])
def test_other_validation_errors(args, cfg, tmp_path):
    if "--config" not in args:
        args = args + ["--config", cfg(S2)]
    assert run(*args, "--out", tmp_path) == EXIT_INVALID


def test_integration_breakdown_exit_code(cfg, tmp_path, capsys):
    text = S2 + "\n[integrator]\nrel_tol = 1e-30\nabs_tol = 1e-30\n"
    assert run("orbit", "--config", cfg(text), "--out", tmp_path) == EXIT_NUMERICAL
    err = capsys.readouterr().err
    assert "orbit through" in err and "0.29999999999999999" in err


def test_selftest_failure_exit_code(tmp_path, monkeypatch):
    def failing(workers=None):
        return [acceptance.Check(1, "always fails", 1.0, 0.0, False)]
    monkeypatch.setattr(acceptance, "CRITERIA", {1: ("broken", failing)})
    assert run("selftest", "--out", tmp_path) == EXIT_SELFTEST
    header, rows = read_csv(tmp_path / "selftest.csv")
    assert header == ["criterion", "check", "value", "threshold", "passed"]
    assert rows == [["1", "always fails", "1", "0", "0"]]


def test_selftest_subset_passes(tmp_path):
    assert run("selftest", "--out", tmp_path, "--criteria", 2, 13) == EXIT_OK
    _, rows = read_csv(tmp_path / "selftest.csv")
    assert {r[0] for r in rows} == {"2", "13"}
    assert all(r[-1] == "1" for r in rows)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "thermolab", "--version"], capture_output=True,
                          text=True, check=True)
    assert __version__ in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "thermolab", "orbit", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_INVALID
    assert "--config" in proc.stderr

"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 1-13 run in-process through ``thermolab.acceptance``. Criterion 14
runs the ``selftest`` subcommand three times (twice with one worker, once
with eight) and compares the CSV bytes.
"""
import os
import subprocess
import sys

import pytest

from thermolab.acceptance import CRITERIA, run_criterion


def report(capsys, number, name, passed, detail=""):
    with capsys.disabled():
        status = "PASS" if passed else "FAIL"
        print(f"\ncriterion {number:2d}: {status}  {name}{detail}")


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    name, checks = run_criterion(number, workers=1)
    failed = [c for c in checks if not c.passed]
    detail = "".join(f"\n    failed: {c.check}: value {c.value!r} vs threshold {c.threshold!r}"
                     for c in failed)
    report(capsys, number, name, not failed, detail)
    assert checks, "criterion produced no checks"
    assert not failed, detail


def selftest(out, workers):
    env = dict(os.environ)
    env.pop("THERMOLAB_WORKERS", None)
    proc = subprocess.run([sys.executable, "-m", "thermolab", "selftest", "--out", str(out),
                           "--workers", str(workers)], capture_output=True, text=True, env=env)
    return proc.returncode, (out / "selftest.csv").read_bytes() if (out / "selftest.csv").exists() else b""


def test_criterion_14_determinism(tmp_path, capsys):
    runs = [selftest(tmp_path / "a", 1), selftest(tmp_path / "b", 1), selftest(tmp_path / "c", 8)]
    codes = [code for code, _ in runs]
    blobs = [blob for _, blob in runs]
    same = bool(blobs[0]) and blobs[0] == blobs[1] == blobs[2]
    report(capsys, 14, "selftest CSV byte-identical across runs and worker counts",
           same and codes == [0, 0, 0], f"  (exit codes {codes})")
    assert codes == [0, 0, 0]
    assert same

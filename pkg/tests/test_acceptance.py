"""Acceptance criteria 1-11, each printing one PASS/FAIL line."""

import subprocess
import sys
import time

import pytest

from cftransfer import suite

LIMITS = {1: 5.0, 4: 60.0}  # seconds


@pytest.fixture
def report_line(capsys):
    def emit(result):
        with capsys.disabled():
            print("\n" + result.line())
    return emit


@pytest.mark.parametrize("cid", range(1, 11))
def test_criterion(cid, report_line):
    start = time.perf_counter()
    result = suite.CRITERIA[cid](0)
    elapsed = time.perf_counter() - start
    report_line(result)
    assert result.passed, result.details
    if cid in LIMITS:
        assert elapsed < LIMITS[cid], f"criterion {cid} took {elapsed:.1f}s"


def test_criterion_4_brackets():
    # the bracket endpoints themselves, not only the verdict
    d = suite.criterion_4(0).details
    lo, hi = d["diag2_s_star"]
    assert hi - lo <= 0.02 and lo <= 0.5 <= hi
    assert d["diag2_lambda"][0] <= 1 <= d["diag2_lambda"][1]
    assert d["diag2_worst_gap"] <= 0.06
    assert d["full2_s_star"][0] <= 1.5 <= d["full2_s_star"][1]
    assert d["full2_lambda"][0] <= 2 <= d["full2_lambda"][1]
    assert d["full2_lambda"][1] < 2 * d["full2_s_star"][0]


def test_criterion_11(report_line, tmp_path):
    result = suite.criterion_11(0)
    outs = []
    for jobs in (1, 3):
        path = tmp_path / f"suite_{jobs}.json"
        proc = subprocess.run([sys.executable, "-m", "cftransfer", "suite", "--all", "--seed", "0",
                               "--jobs", str(jobs), "--out", str(path)], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stdout + proc.stderr
        outs.append(path.read_bytes())
    identical = outs[0] == outs[1]
    result.passed = result.passed and identical
    result.details["cli_reports_identical"] = identical
    report_line(result)
    assert result.passed

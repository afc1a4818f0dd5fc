"""One test per acceptance criterion; each prints a single PASS/FAIL line."""

from __future__ import annotations

import json
import subprocess
import sys

import pytest

from sbl.selftest import CHECKS, Context, Verdict


@pytest.fixture(scope="module")
def ctx():
    # capacities computed for criterion 10 are reused by criterion 14
    return Context(seed=0)


def _report(capsys, verdict: Verdict) -> None:
    with capsys.disabled():
        print("\n" + verdict.line())
    assert verdict.passed, json.dumps(verdict.detail, sort_keys=True)


@pytest.mark.parametrize("number", sorted(CHECKS))
def test_criterion(number, ctx, capsys):
    _report(capsys, CHECKS[number](ctx))


def test_criterion_16_selftest_reports_are_byte_identical(tmp_path, capsys):
    cmd = [sys.executable, "-m", "sbl.cli", "selftest", "--seed", "0", "--out"]
    paths = [tmp_path / "first.json", tmp_path / "second.json"]
    procs = [subprocess.Popen([*cmd, str(p)], stderr=subprocess.DEVNULL) for p in paths]
    codes = [p.wait(timeout=1800) for p in procs]
    first, second = (p.read_bytes() for p in paths)
    report = json.loads(first)
    detail = {"exit_codes": codes, "identical": first == second, "all_passed": report["passed"]}
    verdict = Verdict(16, "two self-test runs from one seed give byte-identical reports", first == second and codes == [0, 0], detail)
    if not verdict.passed:
        verdict.detail["failure"] = "reports differ" if first != second else "self-test failed"
    _report(capsys, verdict)

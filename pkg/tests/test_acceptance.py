"""Acceptance criteria 1-10, one test each; every test prints its pass/fail line."""

import pytest

from qcflow.acceptance import CRITERIA, inverse_flow, run_acceptance_suite, run_criterion, select
from qcflow.flow import DEFAULT_CONTROL


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda c: f"{c.number:02d}_{c.name}")
def test_criterion(criterion, capsys):
    result = run_criterion(criterion)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.error is None, result.error
    assert result.passed, result.line()
    assert result.within_budget, result.line()


@pytest.mark.xfail(strict=True, reason="a 100x looser integrator still inverts to ~4e-8, inside the 1e-7 criterion")
def test_inverse_flow_fails_at_hundredfold_looser_tolerance():
    ok, measured, _ = inverse_flow(DEFAULT_CONTROL.loosened(100))
    assert not ok, measured


def test_inverse_flow_fails_at_ten_thousandfold_looser_tolerance():
    ok, measured, _ = inverse_flow(DEFAULT_CONTROL.loosened(1e4))
    assert not ok, measured


def test_filter_runs_only_selected_criteria():
    lines = []
    results = run_acceptance_suite("shear_bound", echo=lines.append)
    assert [r.name for r in results] == ["shear_bound"]
    assert lines[0].startswith("[PASS]  1 shear_bound") and lines[-1] == "1/1 passed"
    assert [c.number for c in select("3, jacobian")] == [3, 4]
    assert len(select(None)) == 10
    with pytest.raises(KeyError):
        select("shear_bound,warp_drive")


def test_crash_is_reported_as_failure():
    from qcflow.acceptance import Criterion

    def boom(control):
        raise ZeroDivisionError("boom")

    r = run_criterion(Criterion(99, "boom", boom, 1.0))
    assert not r.ok and r.error == "ZeroDivisionError: boom" and "[FAIL]" in r.line()

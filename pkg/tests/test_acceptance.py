"""Acceptance criteria at full budgets; each prints one PASS/FAIL line."""

import pytest

from torsorlab.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    res = run_criterion(number, quick=False)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.detail

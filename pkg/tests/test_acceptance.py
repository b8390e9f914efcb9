"""End-to-end acceptance suite.

Each test runs one numbered criterion at its stated tolerance and prints a
single PASS/FAIL line; run with ``pytest tests/test_acceptance.py -v -s``.
"""

import pytest

from superlens.validation import CHECKS, run_check


@pytest.mark.parametrize("number", sorted(CHECKS))
def test_acceptance_criterion(number, capsys):
    res = run_check(number)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.detail

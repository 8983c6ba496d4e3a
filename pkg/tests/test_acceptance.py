"""Acceptance criteria 1-11 at their stated tolerances.

Each test prints one ``criterion N PASS|FAIL`` line; run with ``pytest -s``
or through ``bmk suite acceptance`` to see the summary.
"""

import pytest

from bmk.suites import CRITERIA


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    res = CRITERIA[number]()
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.summary

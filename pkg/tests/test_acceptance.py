"""One test per acceptance criterion; each prints its PASS/FAIL line.

Set DOBRUSHIN_FULL=1 to run the heavier variants used by ``verify --full``.
"""

import os

import pytest

from dobrushin import acceptance

from conftest import ACCEPTANCE_LINES

FULL = os.environ.get("DOBRUSHIN_FULL") == "1"


@pytest.mark.parametrize("check", acceptance.CRITERIA,
                         ids=[f"c{c.number:02d}" for c in acceptance.CRITERIA])
def test_criterion(check):
    r = check(FULL)
    line = acceptance.format_line(r)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert r.passed, line

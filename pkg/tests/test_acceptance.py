"""Acceptance criteria at their stated tolerances, one test per criterion.

Each criterion prints a PASS/FAIL line (collected in the terminal summary).
Run directly with ``python3 tests/test_acceptance.py`` for the lines alone.
"""

import pytest

from homsafe import acceptance

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # pragma: no cover - direct script run without conftest
    ACCEPTANCE_LINES = []

# criterion 11 aggregates the simulation runs of the others, so it goes last
ORDER = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 11]


@pytest.fixture(scope="module")
def ctx():
    return acceptance.Context()


@pytest.mark.parametrize("cid", ORDER, ids=[f"criterion_{c:02d}_{acceptance.CRITERIA[c].__name__[2:]}" for c in ORDER])
def test_criterion(ctx, cid):
    res = acceptance.run_one(cid, ctx)
    line = res.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert res.passed, line


if __name__ == "__main__":
    import sys

    results = acceptance.run_all(echo=print)
    sys.exit(0 if all(r.passed for r in results) else 1)

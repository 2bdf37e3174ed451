"""Acceptance suite: one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (the lines appear in the
"acceptance criteria" summary section) or directly as a script.
"""

import pytest

from dimerwave.verify import CHECKS, VerifyContext, run_one

from conftest import ACCEPTANCE_LINES


@pytest.fixture(scope="module")
def ctx():
    # default model: kappa=2, w=1, c^2=2, N=32, seed=1
    return VerifyContext()


@pytest.mark.parametrize("check", CHECKS, ids=[c.__name__.removeprefix("check_") for c in CHECKS])
def test_criterion(check, ctx):
    res = run_one(check, ctx)
    line = res.line()
    ACCEPTANCE_LINES[res.number] = line
    print(line)
    assert res.passed, line


if __name__ == "__main__":
    import sys

    context = VerifyContext()
    results = [run_one(c, context) for c in CHECKS]
    for r in results:
        print(r.line())
    sys.exit(0 if all(r.passed for r in results) else 1)

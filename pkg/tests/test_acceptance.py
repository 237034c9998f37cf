"""Acceptance suite at reference scale, one PASS/FAIL line per criterion.

Runs the same code as ``remdyn validate full``. Set REMDYN_ACCEPTANCE_LEVEL=quick
for the trimmed sizes. Can also be run directly: ``python3 tests/test_acceptance.py``.
"""
import json
import os
import sys

import pytest

from remdyn import validation

LEVEL = os.environ.get("REMDYN_ACCEPTANCE_LEVEL", "full")


@pytest.mark.slow
@pytest.mark.parametrize("key", list(validation.CRITERIA))
def test_criterion(key, capsys):
    out = validation.run_criterion(key, LEVEL)
    with capsys.disabled():
        print(f"\n{out.line()}")
        if not out.passed:
            print(json.dumps(out.as_dict()["detail"], indent=1, sort_keys=True)[:4000])
    assert out.passed, out.line()


if __name__ == "__main__":
    verdict = validation.run_suite(LEVEL, echo=print)
    sys.exit(0 if verdict["passed"] else 1)

"""Acceptance gate: every criterion at its stated tolerance, one line each.

Run with ``pytest tests/test_acceptance.py -v -s`` (or the whole suite);
``shearlab validate`` executes the same criteria from the CLI.
"""

import pytest

from shearlab.acceptance import CRITERIA, Context

_ctx = Context(seed=1234, fast=False)


@pytest.mark.parametrize("criterion", CRITERIA,
                         ids=[fn.__name__ for fn in CRITERIA])
def test_criterion(criterion):
    result = criterion(_ctx)
    line = "[%s] %-42s (%.1fs)" % ("PASS" if result.passed else "FAIL",
                                   result.name, result.elapsed)
    print("\n" + line)
    assert result.passed, "%s: %s" % (result.name, result.details)

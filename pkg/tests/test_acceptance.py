"""Acceptance suite: one line per criterion with pinned tolerances.

Criteria 7 to 11 are shared with criterion 12, which reruns them at another
thread count and compares the emitted tables byte for byte.
"""
import pytest

from multiloc.acceptance import DEFAULT_SEED, run_criterion

SLOW = {3, 6, 7, 9, 11, 12}


@pytest.fixture(scope="module")
def results():
    return {}


def _run(k, results, capsys):
    base = {j: results[j] for j in (7, 8, 9, 10, 11) if j in results} if k == 12 else None
    res = run_criterion(k, DEFAULT_SEED, 1.0, 1, base=base)
    results[k] = res
    with capsys.disabled():
        print("\n" + res.line())
    return res


@pytest.mark.parametrize("k", [pytest.param(k, marks=pytest.mark.slow) if k in SLOW else k
                               for k in range(1, 13)])
def test_criterion(k, results, capsys):
    res = _run(k, results, capsys)
    assert res.status == "pass", res.summary

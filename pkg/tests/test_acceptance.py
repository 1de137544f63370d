"""Acceptance gate: one test per criterion, each running the harness suite at its defaults.

The terminal summary (see conftest.py) prints one PASS/FAIL line per criterion.
Criteria 6 and 10 are known to fail at the stated tolerances; the analysis is kept in
the decisions log and the tests are left to fail rather than relaxed.
"""

import pytest

from hartree_lab.suites import SUITES, run_suite

CRITERIA = sorted(SUITES)


@pytest.mark.parametrize("criterion", CRITERIA,
                         ids=[f"{c:02d}-{SUITES[c].__name__}" for c in CRITERIA])
def test_criterion(criterion, acceptance_results):
    result = run_suite(criterion)
    acceptance_results[criterion] = result
    for a in result.assertions:
        print(f"  {a.name}: {a.value:.6g} ({'<=' if a.passed else 'vs'} {a.threshold:.6g})"
              f" {'ok' if a.passed else 'FAILED'}")
    assert result.assertions, "suite recorded no assertions"
    assert result.passed, "; ".join(f"{a.name}: {a.value:.6g} vs {a.threshold:.6g}"
                                    for a in result.failures())


def test_all_criteria_registered():
    assert CRITERIA == list(range(1, 12))

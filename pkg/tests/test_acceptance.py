"""The acceptance gate: every criterion at its stated tolerance.

Each test invokes the corresponding suite function with its frozen
parameters and seeds, printing the measured values on failure.
"""
import pytest

from pinninglab import acceptance as acc


@pytest.mark.parametrize("fn", acc.CRITERIA, ids=[f.__name__ for f in acc.CRITERIA])
def test_criterion(fn):
    res = acc.run_criterion(fn)
    print(res.line())
    assert res.passed, res.details


def test_mutation_hook_is_detected(monkeypatch):
    # negative control: a corrupted overlap normalization must trip criterion 2
    from pinninglab import hierarchy

    monkeypatch.setattr(hierarchy, "_OVERLAP_MUTATION", 1.0 + 1e-6)
    res = acc.crit_02_overlap_identity()
    assert not res.passed

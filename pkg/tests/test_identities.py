import pytest

from qha.identities import SUITE, run_suite


@pytest.fixture(scope="module")
def results(phase, basis):
    return run_suite(phase, basis, seed=0)


def test_suite_size_and_names():
    names = [s[0] for s in SUITE]
    assert len(names) == len(set(names)) >= 25


def test_every_identity_passes(results):
    failed = [(r.name, r.measured, r.tolerance) for r in results if not r.passed]
    assert not failed


def test_reports_carry_anchor_and_tolerance(results):
    for r in results:
        assert r.anchor and r.tolerance > 0
        assert set(r.to_dict()) == {"name", "anchor", "tolerance", "measured", "passed", "seconds"}


def test_suite_is_seed_deterministic(phase, basis):
    a = run_suite(phase, basis, seed=5, names={"trace_formula", "moyal"})
    b = run_suite(phase, basis, seed=5, names={"trace_formula", "moyal"})
    assert [r.measured for r in a] == [r.measured for r in b]

import pytest

from foldtrees import thompson as V
from foldtrees.permsys import finite_psystem
from foldtrees.psystem import (FAIL, INCONCLUSIVE, PASS, GuardExceeded, OverriddenA, ThompsonSystem, bfs_closure,
                               check_P1, check_P2, check_P4_search, intersection_law, recheck_p4_witness)


@pytest.fixture(scope="module")
def thompson():
    return ThompsonSystem()


@pytest.mark.parametrize("i", [1, 2, 3, 4])
def test_thompson_P1_P2(thompson, i):
    assert check_P1(thompson, i, samples=100, seed=i).status == PASS
    assert check_P2(thompson, i).status == PASS


def test_finite_P1_exhaustive():
    report = check_P1(finite_psystem(6), 1)
    assert report.status == PASS
    assert report.samples == 24


def test_P1_negative_control(thompson):
    bad = OverriddenA(thompson, V.A)
    report = check_P1(bad, 1, samples=100, seed=0)
    assert report.status == FAIL
    g = V.VElement.from_json(report.witness["g"])
    assert V.in_level(g, 0)
    assert V.A * g != g * V.A


def test_P2_finite():
    ok = check_P2(finite_psystem(6), 1)
    assert ok.status == PASS and ok.samples == 720
    bad = check_P2(finite_psystem(7), 1)
    assert bad.status == FAIL
    assert bad.witness["closure_order"] == 720 and bad.witness["order_M"] == 5040


@pytest.mark.parametrize("i", [1, 2])
def test_P4_fails_for_thompson(thompson, i):
    report = check_P4_search(thompson, i, budget=50)
    assert report.status == FAIL
    assert recheck_p4_witness(thompson, i, report.witness)
    assert report.witness["n"] == i + 1


def test_P4_witness_tampering_detected(thompson):
    report = check_P4_search(thompson, 1, budget=10)
    forged = dict(report.witness, c=V.A.to_json())
    assert not recheck_p4_witness(thompson, 1, forged)


def test_P4_inconclusive_on_depth_one():
    assert check_P4_search(finite_psystem(6), 1).status == INCONCLUSIVE


def test_P4_on_sym7_finds_nothing_to_contradict():
    # with depth 2, level 2 is all of M; any candidate conjugate lies there
    report = check_P4_search(finite_psystem(7), 1, budget=20)
    assert report.status in (FAIL, INCONCLUSIVE)
    if report.status == FAIL:
        assert recheck_p4_witness(finite_psystem(7), 1, report.witness)


@pytest.mark.parametrize("i", [1, 2, 3, 4])
def test_intersection_law(thompson, i):
    assert intersection_law(thompson, i, samples=50, seed=i).status == PASS


def test_intersection_law_finite():
    assert intersection_law(finite_psystem(6), 1).status == PASS


def test_checks_beyond_depth_are_inconclusive():
    s6 = finite_psystem(6)
    assert check_P1(s6, 2).status == INCONCLUSIVE
    assert check_P2(s6, 2).status == INCONCLUSIVE


def test_bfs_closure_guard():
    from foldtrees.permsys import Perm
    gens = [Perm.from_cycles(6, (1, 2)), Perm.from_cycles(6, (1, 2, 3, 4, 5, 6))]
    assert len(bfs_closure(gens, Perm.identity(6))) == 720
    with pytest.raises(GuardExceeded):
        bfs_closure(gens, Perm.identity(6), guard=100)


def test_report_json_shape(thompson):
    data = check_P1(thompson, 1, samples=5).to_json()
    assert set(data) == {"check", "params", "status", "witness", "samples", "seed", "note"}

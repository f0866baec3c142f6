import random

import pytest
from hypothesis import given, settings, strategies as st

from foldtrees import thompson as V
from foldtrees.bassserre import TreePoint
from foldtrees.dyadic import ZERO, Dyadic
from foldtrees.foldengine import Pipeline, check_edge_stab, check_morph_summary, fold_history, overlap_length
from foldtrees.permsys import finite_psystem
from foldtrees.psystem import PASS, ThompsonSystem

V_PIPE = Pipeline(ThompsonSystem())
S_PIPE = Pipeline(finite_psystem(6))


def random_word(pipe, i, rng, length=3):
    sysm = pipe.sys
    tag = rng.choice([0, i])
    pairs = []
    for _ in range(length):
        g = sysm.sample_level(rng, i - 1) if rng.random() < 0.2 else sysm.sample(rng)
        pairs.append((tag, g))
        tag = i if tag == 0 else 0
    c = pipe.calc(i)
    return c.reduce(c.word(*pairs))


def random_point(pipe, i, rng):
    tree = pipe.tree(i)
    return tree.point(tree.edge(random_word(pipe, i, rng, rng.randint(0, 3))), tree.length.scale2(-2) * rng.randint(0, 4))


def test_phi_fixes_base_factor():
    c1 = V_PIPE.calc(1)
    g = V.random_element(3, 5)
    assert V_PIPE.phi(1, c1.word((0, g))) == V_PIPE.calc(2).word((0, g))


def test_phi_on_edge_group_of_copy():
    c1 = V_PIPE.calc(1)
    rng = random.Random(0)
    for _ in range(10):
        g = V.random_level_element(rng, 0)
        img = V_PIPE.phi(1, c1.word((1, g)))
        assert V_PIPE.calc(2).equal(img, V_PIPE.calc(2).word((0, g)))


def test_phi_rejects_wrong_stage():
    with pytest.raises(ValueError):
        V_PIPE.phi(2, V_PIPE.calc(1).identity())
    with pytest.raises(ValueError):
        S_PIPE.phi(2, S_PIPE.calc(2).identity())


@pytest.mark.parametrize("pipe,i", [(V_PIPE, 1), (V_PIPE, 2), (S_PIPE, 1)], ids=["V1", "V2", "sym6"])
def test_phi_is_a_homomorphism(pipe, i):
    rng = random.Random(i)
    c, d = pipe.calc(i), pipe.calc(i + 1)
    for _ in range(300):
        u, w = random_word(pipe, i, rng), random_word(pipe, i, rng)
        assert d.equal(d.mul(pipe.phi(i, u), pipe.phi(i, w)), pipe.phi(i, c.mul(u, w)))


def test_vertex_images():
    tree1, tree2 = V_PIPE.tree(1), V_PIPE.tree(2)
    m = V_PIPE.vertex_image(1, tree1.vertex())
    assert tree2.distance(m, tree2.vertex_point(tree2.vertex())) == ZERO
    mid = V_PIPE.point_image(1, tree1.point(tree1.edge(), Dyadic(1, 1)))
    assert tree2.distance(mid, tree2.vertex_point(tree2.vertex(side=2))) == ZERO
    # the copy vertex of T_1 lands at a_1 applied to the vertex M of T_2
    far = V_PIPE.vertex_image(1, tree1.vertex(side=1))
    a_vertex = tree2.vertex(tree2.calc.word((2, V.a(1))))
    assert tree2.distance(far, tree2.vertex_point(a_vertex)) == ZERO


@pytest.mark.parametrize("pipe,i", [(V_PIPE, 1), (V_PIPE, 2), (S_PIPE, 1)], ids=["V1", "V2", "sym6"])
def test_maps_do_not_increase_distance(pipe, i):
    rng = random.Random(10 + i)
    for _ in range(60):
        p, q = random_point(pipe, i, rng), random_point(pipe, i, rng)
        d0 = pipe.tree(i).distance(p, q)
        d1 = pipe.tree(i + 1).distance(pipe.point_image(i, p), pipe.point_image(i, q))
        assert d1 <= d0


@pytest.mark.parametrize("pipe,i", [(V_PIPE, 1), (S_PIPE, 1)], ids=["V1", "sym6"])
def test_maps_are_equivariant(pipe, i):
    rng = random.Random(20 + i)
    nxt = pipe.tree(i + 1)
    for _ in range(60):
        p = random_point(pipe, i, rng)
        g = random_word(pipe, i, rng)
        lhs = pipe.point_image(i, pipe.tree(i).act(g, p))
        rhs = nxt.act(pipe.phi(i, g), pipe.point_image(i, p))
        assert nxt.distance(lhs, rhs) == ZERO


@given(st.integers(0, 10**9))
@settings(max_examples=40, deadline=None)
def test_edges_embed_isometrically(seed):
    rng = random.Random(seed)
    tree = V_PIPE.tree(1)
    e = tree.edge(random_word(V_PIPE, 1, rng))
    lo, hi = (tree.vertex_point(v) for v in tree.endpoints(e))
    for j, d in enumerate(V_PIPE.distances(1, lo, hi, 5), start=1):
        assert d == Dyadic(1)
        assert d.exp <= j - 1


def test_overlap_of_identical_paths():
    tree = S_PIPE.tree(1)
    ends = tuple(tree.vertex_point(v) for v in tree.endpoints(tree.edge()))
    assert overlap_length(tree, ends, ends) == Dyadic(1)
    assert overlap_length(tree, ends, ends[::-1]) == Dyadic(1)


def test_adjacent_edges_fold_history():
    tree = V_PIPE.tree(1)
    c = tree.calc
    g, _ = V.p4_counterexample(1)
    a, b = tree.edge(), tree.edge(c.word((1, g)))
    hist = fold_history(V_PIPE, 1, a, b, 5)
    # the edges share the copy vertex, so the overlap is (2 - d) / 2 with d the distance of the far ends
    far = V_PIPE.distances(1, tree.vertex_point(tree.vertex()), tree.vertex_point(tree.vertex(c.word((1, g)))), 5)
    assert [str(d) for d in far] == ["2", "1", "1/2", "1/2", "1/2"]
    assert hist.overlaps == [(Dyadic(2) - d).scale2(-1) for d in far]
    assert hist.growth_stages == [2, 3]


@pytest.mark.parametrize("i", [1, 2, 3])
def test_fold_step_checks_thompson(i):
    report = check_morph_summary(V_PIPE, i, samples=40, seed=i)
    assert report.status == PASS, report.witness


def test_fold_step_checks_finite():
    assert check_morph_summary(S_PIPE, 1).status == PASS


def test_edge_stab():
    assert check_edge_stab(V_PIPE, 1, 3, samples=40).status == PASS
    assert check_edge_stab(S_PIPE, 1, 2).status == PASS


def test_point_image_checks_parameter():
    with pytest.raises(ValueError):
        V_PIPE.point_image(1, TreePoint(V_PIPE.tree(1).edge(), Dyadic(3)))

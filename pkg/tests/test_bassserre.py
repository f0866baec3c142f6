import random

import pytest
from hypothesis import given, settings, strategies as st

from foldtrees.bassserre import BassSerreTree, TransversalOracle, edge_length
from foldtrees.dyadic import ZERO, Dyadic
from foldtrees.permsys import Perm, finite_psystem
from foldtrees.psystem import ThompsonSystem

SYM6 = finite_psystem(6)
TREE = BassSerreTree(SYM6, 1)
ORACLE = TransversalOracle(SYM6, 1)
V_TREE = BassSerreTree(ThompsonSystem(), 2)

seeds = st.integers(0, 10**9)


def random_word(tree, rng, length):
    sysm = tree.sys
    tag = rng.choice([0, tree.copy])
    pairs = []
    for _ in range(length):
        pairs.append((tag, sysm.sample(rng)))
        tag = tree.copy if tag == 0 else 0
    return tree.calc.reduce(tree.calc.word(*pairs))


def random_point(tree, rng, length=3):
    step = tree.length.scale2(-2)
    return tree.point(tree.edge(random_word(tree, rng, rng.randint(0, length))), step * rng.randint(0, 4))


def test_edge_lengths():
    assert edge_length(1) == Dyadic(1)
    assert edge_length(3) == Dyadic(1, 2)


def test_fundamental_distances():
    m, m1 = TREE.vertex(), TREE.vertex(side=1)
    assert TREE.vertex_distance(m, m1) == Dyadic(1)
    g = SYM6.sample(random.Random(0))
    assert TREE.vertex_distance(m, TREE.vertex(TREE.calc.word((0, g)))) == ZERO


def test_distance_two_through_copy_vertex():
    m = TREE.vertex()
    n = Perm.from_cycles(6, (4, 5, 6))
    assert not SYM6.in_level(n, 0)
    far = TREE.vertex(TREE.calc.word((1, n)))
    assert TREE.vertex_distance(m, far) == Dyadic(2)
    assert ORACLE.distance_steps(TREE.calc.identity(), 0, far.rep, 0, 3) == 2


@given(seeds)
@settings(max_examples=150, deadline=None)
def test_vertex_distance_matches_bfs(seed):
    rng = random.Random(seed)
    u = random_word(TREE, rng, rng.randint(0, 2))
    v = random_word(TREE, rng, rng.randint(0, 2))
    su, sv = rng.choice([0, 1]), rng.choice([0, 1])
    steps = TREE.vertex_steps(TREE.vertex(u, su), TREE.vertex(v, sv))
    oracle = ORACLE.distance_steps(u, su, v, sv, 3)
    if oracle is not None:
        assert steps == oracle
    else:
        assert steps > 3


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_geodesic_is_a_path(seed):
    rng = random.Random(seed)
    u = TREE.vertex(random_word(TREE, rng, 3), rng.choice([0, 1]))
    v = TREE.vertex(random_word(TREE, rng, 3), rng.choice([0, 1]))
    path = TREE.geodesic_vertices(u, v)
    assert TREE.same_vertex(path[0], u) and TREE.same_vertex(path[-1], v)
    assert len(path) == TREE.vertex_steps(u, v) + 1
    for a, b in zip(path, path[1:]):
        assert TREE.vertex_steps(a, b) == 1
    edges = TREE.geodesic_edges(u, v)
    assert len(edges) == len(path) - 1
    for e, a, b in zip(edges, path, path[1:]):
        ends = TREE.endpoints(e)
        assert {TREE.vertex_steps(a, x) for x in ends} | {TREE.vertex_steps(b, x) for x in ends} == {0, 1}


@pytest.mark.parametrize("tree", [TREE, V_TREE], ids=["sym6", "thompson"])
def test_metric_axioms(tree):
    rng = random.Random(5)
    for _ in range(60):
        p, q, r = (random_point(tree, rng) for _ in range(3))
        dpq = tree.distance(p, q)
        assert dpq == tree.distance(q, p)
        assert tree.distance(p, p) == ZERO
        assert dpq <= tree.distance(p, r) + tree.distance(r, q)
        # all distances are multiples of a quarter edge
        assert (dpq * Dyadic(4) * Dyadic.pow2(tree.stage - 1)).exp == 0


@pytest.mark.parametrize("tree", [TREE, V_TREE], ids=["sym6", "thompson"])
def test_action_is_isometric(tree):
    rng = random.Random(9)
    for _ in range(40):
        p, q = random_point(tree, rng), random_point(tree, rng)
        g = random_word(tree, rng, 3)
        assert tree.distance(tree.act(g, p), tree.act(g, q)) == tree.distance(p, q)


def test_point_geodesic_edges_cover_distance():
    rng = random.Random(2)
    for _ in range(50):
        p, q = random_point(TREE, rng), random_point(TREE, rng)
        u, v, edges = TREE.point_geodesic(p, q)
        d = TREE.distance(p, q)
        assert TREE.length * len(edges) <= d
        # at most a fraction of an edge on each end is not covered
        assert d - TREE.length * len(edges) < TREE.length * 2


def test_edge_stabilizers():
    t2 = V_TREE
    c = t2.calc
    sysm = t2.sys
    rng = random.Random(4)
    e = t2.edge()
    g1 = sysm.sample_level(rng, 1)
    assert t2.edge_stabilizer_contains(e, c.word((0, g1)))
    g2 = next(g for g in (sysm.sample_level(rng, 2) for _ in range(50)) if not sysm.in_level(g, 1))
    assert not t2.edge_stabilizer_contains(e, c.word((0, g2)))
    x = random_word(t2, rng, 3)
    moved = t2.edge(x)
    assert t2.edge_stabilizer_contains(moved, c.conjugate(c.word((0, g1)), x))
    assert t2.vertex_stabilizer_contains(t2.vertex(side=2), c.word((2, g2)))


def test_balls():
    assert ORACLE.index == 30
    assert ORACLE.ball(0).vertex_count == 1
    one = ORACLE.ball(1)
    assert one.vertex_count == 31 and one.edge_count == 30
    assert ORACLE.ball(2).vertex_count == 1 + 30 + 30 * 29
    dot = one.to_dot()
    assert dot.startswith("graph") and dot.count(" -- ") == 30


def test_ball_guard():
    with pytest.raises(ValueError):
        ORACLE.ball(3, guard=1000)


def test_oracle_rejects_infinite_system():
    with pytest.raises(ValueError):
        TransversalOracle(ThompsonSystem(), 1)


def test_point_parameter_checked():
    with pytest.raises(ValueError):
        TREE.point(TREE.edge(), Dyadic(2))

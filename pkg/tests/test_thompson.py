import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from foldtrees import thompson as V
from foldtrees.dyadic import Dyadic, Interval

LETTERS = [V.A, V.B, V.C, V.PI0, V.A.inverse(), V.B.inverse(), V.C.inverse(), V.PI0.inverse()]
elements = st.lists(st.sampled_from(LETTERS), max_size=8).map(
    lambda ws: V.compose(*ws) if len(ws) == 2 else _product(ws))
points = st.builds(Dyadic, st.integers(0, 2**12 - 1), st.just(12))


def _product(ws):
    out = V.identity()
    for w in ws:
        out = out * w
    return out


def slow_eval(f, x):
    """Evaluate from the piece list using plain fractions."""
    x = Fraction(x.to_fraction())
    for src, dst in f.pairs:
        lo, hi = src.lo.to_fraction(), src.hi.to_fraction()
        if lo <= x < hi:
            ratio = (dst.hi.to_fraction() - dst.lo.to_fraction()) / (hi - lo)
            return dst.lo.to_fraction() + (x - lo) * ratio
    raise AssertionError("point not covered")


def q(s):
    return Dyadic.of(s)


def test_generator_values():
    assert V.evaluate(V.A, q("1/2")) == q("1/4")
    assert V.evaluate(V.PI0, 0) == q("1/2")
    assert V.evaluate(V.identity(), q("3/8")) == q("3/8")
    assert V.evaluate(V.a(1), 0) == q("1/4")
    assert V.evaluate(V.B, q("1/4")) == q("1/4")
    assert V.evaluate(V.C, q("3/4")) == q("1/2")


def test_compose_examples():
    assert V.compose(V.a(1), V.a(1)).is_identity()
    assert V.compose(V.A, V.inverse(V.A)).is_identity()
    assert V.evaluate(V.compose(V.A, V.A), q("7/8")) == V.evaluate(V.A, q("3/4")) == q("1/2")


def test_evaluate_outside_domain():
    with pytest.raises(V.DomainError):
        V.evaluate(V.A, 1)
    with pytest.raises(V.DomainError):
        V.evaluate(V.A, q("-1/2"))


def test_level_predicates():
    assert V.fixes_pointwise(V.B, Interval.parse(0, "1/2"))
    assert not V.in_level(V.A, 0)
    for i in range(6):
        assert V.in_level(V.identity(), i)
    # a_i moves [0, 1/2^(i+1)) so it lies in no G_j with j <= i
    assert not V.in_level(V.a(2), 2)


@given(elements, elements, elements)
def test_associativity(f, g, h):
    assert (f * g) * h == f * (g * h)


@given(elements)
def test_inverse_and_canonical(f):
    assert (f * f.inverse()).is_identity()
    assert (f.inverse() * f).is_identity()
    assert V.is_canonical(f)


@given(elements, elements, points)
def test_evaluation_homomorphism(f, g, x):
    assert V.evaluate(f * g, x) == V.evaluate(f, V.evaluate(g, x))
    assert V.evaluate(f, x).to_fraction() == slow_eval(f, x)


@given(elements)
def test_json_roundtrip(f):
    assert V.VElement.from_json(f.to_json()) == f


def test_equal_elements_have_equal_tables():
    # the same element reached by two different words
    lhs = V.A * V.A.inverse() * V.B
    assert lhs == V.B and hash(lhs) == hash(V.B)


def test_bad_table_rejected():
    with pytest.raises(ValueError):
        V.from_pieces([(0, Fraction(1, 2), 0, Fraction(1, 2))])
    with pytest.raises(ValueError):
        V.from_pieces([(0, Fraction(3, 4), 0, Fraction(3, 4)), (Fraction(3, 4), 1, Fraction(1, 2), Fraction(3, 4))])


def test_transporter_examples():
    J, K, fix = Interval.parse("3/4", 1), Interval.parse("1/4", "1/2"), Interval.parse(0, "1/4")
    d = V.transporter(J, K, fix)
    assert V.evaluate(d, q("3/4")) == q("1/4")
    assert V.evaluate(d, q("7/8")) == q("3/8")
    assert V.in_level(d, 1)
    assert V.transporter(J, J).is_identity()


@given(st.integers(1, 4), st.integers(0, 10**6))
@settings(max_examples=30)
def test_transporter_maps_and_fixes(i, seed):
    rng = random.Random(seed)
    n = i + 2
    k1, k2 = rng.sample(range(2, 2**n), 2)
    J = Interval(Dyadic(k1, n), Dyadic(k1 + 1, n))
    K = Interval(Dyadic(k2, n), Dyadic(k2 + 1, n))
    fix = Interval(Dyadic(0), Dyadic(1, n - 1))
    d = V.transporter(J, K, fix)
    for m in range(8):
        x = J.lo + Dyadic(m, n + 3)
        assert V.evaluate(d, x) == K.lo + Dyadic(m, n + 3)
    assert V.fixes_pointwise(d, fix)


@pytest.mark.parametrize("i", [1, 2, 3, 4])
def test_generation_witness(i):
    words = V.generation_witness(i)
    assert set(words) == {"A", "B", "C", "pi0"}
    for name, word in words.items():
        assert word.product() == V.GENERATORS[name]
        for tag, g in word.letters:
            assert V.letter_ok(tag, g, i)


def test_witness_middle_letter_for_pi0():
    words = V.generation_witness(1)
    middle = [g for tag, g in words["pi0"].letters if tag == "Ga"]
    assert len(middle) == 1 and all(V.fixes_pointwise(g, Interval.parse("1/4", "1/2")) for g in middle)


@pytest.mark.parametrize("i", [1, 2, 3, 4])
def test_p4_counterexample(i):
    c, cert = V.p4_counterexample(i)
    assert V.in_level(c, i) and not V.in_level(c, i - 1)
    assert V.in_level(V.a(i) * c * V.a(i).inverse(), i + 1)
    assert V.certificate_holds(cert)


def test_p4_counterexample_first_level():
    c, _ = V.p4_counterexample(1)
    # swaps [3/8, 7/16) with [7/16, 1/2)
    assert V.evaluate(c, q("3/8")) == q("7/16")
    assert V.evaluate(c, q("7/16")) == q("3/8")
    conj = V.a(1) * c * V.a(1).inverse()
    assert V.fixes_pointwise(conj, Interval.parse(0, "1/8"))


def test_tampered_certificate_fails():
    _, cert = V.p4_counterexample(1)
    assert not V.certificate_holds(dict(cert, conjugate=V.A.to_json()))
    assert not V.certificate_holds(dict(cert, c=V.A.to_json()))
    # the stored flags are not trusted
    _, other = V.p4_counterexample(2)
    assert not V.certificate_holds(dict(other, i=1))


def test_random_element_determinism():
    assert V.random_element(5, 0).is_identity()
    assert V.random_element(11, 7) == V.random_element(11, 7)


@given(st.integers(0, 4), st.integers(0, 10**6))
@settings(max_examples=40)
def test_random_level_element_is_in_level(i, seed):
    g = V.random_level_element(random.Random(seed), i)
    assert V.in_level(g, i)

"""Thompson's group V as exact tables of standard dyadic intervals.

An element is stored as a tuple of pairs ``((ks, ns), (kd, nd))``.  Each pair
maps the standard interval ``[ks/2^ns, (ks+1)/2^ns)`` affinely and increasingly
onto ``[kd/2^nd, (kd+1)/2^nd)``.  The source intervals partition ``[0, 1)`` and
so do the targets.  Canonical form merges sibling pairs until none remain,
which is the reduced tree-pair diagram read as an interval table, so two
elements are equal exactly when their tables are equal.

Group multiplication is function composition: ``f * g`` is ``x -> f(g(x))``.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .dyadic import ONE, ZERO, Dyadic, Interval

Std = tuple[int, int]
Pair = tuple[Std, Std]


class DomainError(ValueError):
    """A point outside ``[0, 1)`` was passed to an element of V."""


class ConstructionError(ValueError):
    """No element of V with the requested properties could be built."""


def std_interval(s: Std) -> Interval:
    k, n = s
    return Interval(Dyadic(k, n), Dyadic(k + 1, n))


def _std_lo(s: Std) -> Dyadic:
    return Dyadic(s[0], s[1])


def _sub_image(sub: Std, src: Std, dst: Std) -> Std:
    """Image of the standard interval ``sub`` (inside ``src``) under ``src -> dst``."""
    k, n = sub
    ks, ns = src
    kd, nd = dst
    m = n - ns
    r = k - (ks << m)
    return (kd << m) + r, nd + m


def _sort_key_fn(table: Sequence[Pair], col: int):
    depth = max(p[col][1] for p in table)
    return lambda p: p[col][0] << (depth - p[col][1])


def _mergeable(p: Pair, q: Pair) -> bool:
    (k1, n1), (d1, m1) = p
    (k2, n2), (d2, m2) = q
    return (
        n1 == n2 and k1 % 2 == 0 and k2 == k1 + 1
        and m1 == m2 and d1 % 2 == 0 and d2 == d1 + 1
    )


def _canonical(table: Iterable[Pair], presorted: bool = False) -> tuple[Pair, ...]:
    table = list(table)
    if not presorted:
        table.sort(key=_sort_key_fn(table, 0))
    stack: list[Pair] = []
    for pair in table:
        stack.append(pair)
        while len(stack) >= 2 and _mergeable(stack[-2], stack[-1]):
            (k, n), (d, m) = stack[-2]
            del stack[-2:]
            stack.append(((k >> 1, n - 1), (d >> 1, m - 1)))
    return tuple(stack)


def _check_partition(intervals: list[Std]) -> None:
    if not intervals:
        raise ValueError("empty table")
    depth = max(n for _, n in intervals)
    spans = sorted((k << (depth - n), (k + 1) << (depth - n)) for k, n in intervals)
    pos = 0
    for lo, hi in spans:
        if lo != pos:
            raise ValueError("intervals do not partition [0, 1)")
        pos = hi
    if pos != 1 << depth:
        raise ValueError("intervals do not partition [0, 1)")


class VElement:
    """An element of Thompson's group V in canonical interval-table form."""

    __slots__ = ("table", "_depth", "_keys", "_hash", "_inv")

    def __init__(self, table: Iterable[Pair], *, check: bool = True, presorted: bool = False):
        table = list(table)
        if check:
            for s, d in table:
                if s[1] < 0 or d[1] < 0 or not (0 <= s[0] < (1 << s[1])) or not (0 <= d[0] < (1 << d[1])):
                    raise ValueError(f"bad standard interval in pair {(s, d)}")
            _check_partition([s for s, _ in table])
            _check_partition([d for _, d in table])
        self.table: tuple[Pair, ...] = _canonical(table, presorted and not check)
        self._depth = max(s[1] for s, _ in self.table)
        self._keys = [s[0] << (self._depth - s[1]) for s, _ in self.table]
        self._hash = hash(self.table)
        self._inv = None

    # -- group structure -------------------------------------------------
    def __mul__(self, other: "VElement") -> "VElement":
        return compose(self, other)

    def inverse(self) -> "VElement":
        return inverse(self)

    def __eq__(self, other):
        if not isinstance(other, VElement):
            return NotImplemented
        return self.table == other.table

    def __hash__(self):
        return self._hash

    def __call__(self, x) -> Dyadic:
        return evaluate(self, x)

    def is_identity(self) -> bool:
        return all(s == d for s, d in self.table)

    @property
    def pairs(self) -> list[tuple[Interval, Interval]]:
        return [(std_interval(s), std_interval(d)) for s, d in self.table]

    def _locate(self, k: int, n: int) -> int:
        """Index of the source piece containing the point ``k / 2^n``."""
        d = self._depth
        key = k << (d - n) if n <= d else k >> (n - d)
        return bisect_right(self._keys, key) - 1

    def __repr__(self):
        body = ", ".join(f"{s}->{d}" for s, d in self.pairs)
        return f"VElement({body})"

    # -- serialization ---------------------------------------------------
    def to_json(self) -> dict:
        def interval(s: Std) -> dict:
            iv = std_interval(s)
            return {"lo": iv.lo.to_pair(), "hi": iv.hi.to_pair()}

        return {"pairs": [{"src": interval(s), "dst": interval(d)} for s, d in self.table]}

    @classmethod
    def from_json(cls, data: dict) -> "VElement":
        def std(obj) -> Std:
            iv = Interval(Dyadic.from_pair(obj["lo"]), Dyadic.from_pair(obj["hi"]))
            if not iv.is_standard():
                raise ValueError(f"{iv} is not a standard dyadic interval")
            n = iv.length.exp
            return iv.lo.floor_scaled(n), n

        return cls([(std(p["src"]), std(p["dst"])) for p in data["pairs"]])


def identity() -> VElement:
    return _IDENTITY


_IDENTITY = VElement([((0, 0), (0, 0))])


def _compose_tables(f: VElement, g_table: Sequence[Pair]) -> list[Pair]:
    out: list[Pair] = []
    for s, d in g_table:
        kd, nd = d
        idx = f._locate(kd, nd)
        fs, fd = f.table[idx]
        if fs[1] <= nd:
            out.append((s, _sub_image(d, fs, fd)))
            continue
        # d is split across several source pieces of f
        end = (kd + 1) << (f._depth - nd)
        j = idx
        while j < len(f.table) and f._keys[j] < end:
            fs, fd = f.table[j]
            out.append((_sub_image(fs, d, s), fd))
            j += 1
    return out


def compose(f: VElement, g: VElement) -> VElement:
    """The element ``x -> f(g(x))``."""
    if g is _IDENTITY:
        return f
    if f is _IDENTITY:
        return g
    # pieces come out in source order: g's table is sorted and each piece is split left to right
    return VElement(_compose_tables(f, g.table), check=False, presorted=True)


def inverse(f: VElement) -> VElement:
    if f._inv is None:
        f._inv = VElement([(d, s) for s, d in f.table], check=False)
        f._inv._inv = f
    return f._inv


def evaluate(f: VElement, x) -> Dyadic:
    x = Dyadic.of(x)
    if not (ZERO <= x < ONE):
        raise DomainError(f"{x} is outside [0, 1)")
    depth = max(f._depth, x.exp)
    idx = f._locate(x.floor_scaled(depth), depth)
    (ks, ns), (kd, nd) = f.table[idx]
    return Dyadic(kd, nd) + (x - Dyadic(ks, ns)).scale2(ns - nd)


def fixes_pointwise(f: VElement, interval: Interval) -> bool:
    """True iff ``f`` restricts to the identity on ``interval``."""
    for s, d in f.table:
        if std_interval(s).overlaps(interval) and s != d:
            return False
    return True


def in_level(f: VElement, i: int) -> bool:
    """Membership in ``G_i``, the pointwise stabilizer of ``[0, 1/2^(i+1))``."""
    shift = i + 1
    for (ks, ns), d in f.table:
        if (ks << shift) >= (1 << ns):
            break
        if (ks, ns) != d:
            return False
    return True


def level_interval(i: int) -> Interval:
    return Interval(ZERO, Dyadic(1, i + 1))


def swap_interval(i: int) -> Interval:
    """``[1/2^(i+1), 1/2^i)``, the interval fixed by ``G_i^{a_i}``."""
    return Interval(Dyadic(1, i + 1), Dyadic(1, i))


# -- building elements from affine pieces ----------------------------------

def std_cover(lo: Dyadic, hi: Dyadic) -> list[Std]:
    """Greedy left-to-right decomposition of ``[lo, hi)`` into maximal standard intervals."""
    out: list[Std] = []
    cur = lo
    while cur < hi:
        n = cur.exp
        while cur + Dyadic(1, n) > hi:
            n += 1
        out.append((cur.floor_scaled(n), n))
        cur = cur + Dyadic(1, n)
    return out


def _log2_ratio(num: Dyadic, den: Dyadic) -> int:
    ratio = num.to_fraction() / den.to_fraction()
    p, q = ratio.numerator, ratio.denominator
    if p & (p - 1) or q & (q - 1):
        raise ConstructionError(f"length ratio {ratio} is not a power of 2")
    return (p.bit_length() - 1) - (q.bit_length() - 1)


def _affine_pairs(src: Interval, dst: Interval) -> list[Pair]:
    slope = _log2_ratio(dst.length, src.length)
    out: list[Pair] = []
    todo = std_cover(src.lo, src.hi)
    todo.reverse()
    while todo:
        k, n = todo.pop()
        lo = Dyadic(k, n)
        img_lo = dst.lo + (lo - src.lo).scale2(slope)
        m = n - slope
        if m >= 0 and img_lo.exp <= m:
            out.append(((k, n), (img_lo.floor_scaled(m), m)))
        else:
            todo.append((2 * k + 1, n + 1))
            todo.append((2 * k, n + 1))
    return out


def from_pieces(pieces: Iterable[tuple]) -> VElement:
    """Build an element from affine pieces ``(src_lo, src_hi, dst_lo, dst_hi)``."""
    table: list[Pair] = []
    for slo, shi, dlo, dhi in pieces:
        table.extend(_affine_pairs(Interval.parse(slo, shi), Interval.parse(dlo, dhi)))
    return VElement(table)


def _q(s: str) -> Fraction:
    return Fraction(s)


A = from_pieces([
    (0, _q("1/2"), 0, _q("1/4")),
    (_q("1/2"), _q("3/4"), _q("1/4"), _q("1/2")),
    (_q("3/4"), 1, _q("1/2"), 1),
])
B = from_pieces([
    (0, _q("1/2"), 0, _q("1/2")),
    (_q("1/2"), _q("3/4"), _q("1/2"), _q("5/8")),
    (_q("3/4"), _q("7/8"), _q("5/8"), _q("3/4")),
    (_q("7/8"), 1, _q("3/4"), 1),
])
C = from_pieces([
    (0, _q("1/2"), _q("3/4"), 1),
    (_q("1/2"), _q("3/4"), 0, _q("1/2")),
    (_q("3/4"), 1, _q("1/2"), _q("3/4")),
])
PI0 = from_pieces([
    (0, _q("1/2"), _q("1/2"), _q("3/4")),
    (_q("1/2"), _q("3/4"), 0, _q("1/2")),
    (_q("3/4"), 1, _q("3/4"), 1),
])

GENERATORS = {"A": A, "B": B, "C": C, "pi0": PI0}


def a(i: int) -> VElement:
    """The involution swapping ``[0, 1/2^(i+1))`` and ``[1/2^(i+1), 1/2^i)``."""
    if i < 1:
        raise ValueError("a_i is defined for i >= 1")
    h = Dyadic(1, i + 1)
    q = Dyadic(1, i)
    return from_pieces([(ZERO, h, h, q), (h, q, ZERO, h), (q, ONE, q, ONE)])


def generator(name: str, i: int | None = None) -> VElement:
    if name in ("a", "a_i"):
        if i is None:
            raise ValueError("a_i needs an index")
        return a(i)
    aliases = {"π0": "pi0", "π₀": "pi0", "pi_0": "pi0"}
    name = aliases.get(name, name)
    try:
        return GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown generator {name!r}") from None


# -- transporters ------------------------------------------------------------

def _complement(intervals: list[Interval]) -> list[Interval]:
    spans = sorted(intervals, key=lambda iv: iv.lo)
    out = []
    pos = ZERO
    for iv in spans:
        if iv.lo < pos:
            raise ConstructionError("intervals overlap")
        if pos < iv.lo:
            out.append(Interval(pos, iv.lo))
        pos = iv.hi
    if pos < ONE:
        out.append(Interval(pos, ONE))
    return out


def _split_largest(pieces: list[Std]) -> None:
    idx = min(range(len(pieces)), key=lambda j: (pieces[j][1], j))
    k, n = pieces[idx]
    pieces[idx:idx + 1] = [(2 * k, n + 1), (2 * k + 1, n + 1)]


def transporter(J: Interval, K: Interval, fix: Interval | Sequence[Interval] | None = None) -> VElement:
    """An element mapping ``J`` affinely onto ``K`` and fixing ``fix`` pointwise.

    The rest of ``[0, 1)`` is matched greedily: both complements are cut into
    maximal standard intervals, and the list with fewer pieces has its largest
    (leftmost on ties) piece halved until the counts agree; pieces are then
    paired in left-to-right order.
    """
    if fix is None:
        fixed: list[Interval] = []
    elif isinstance(fix, Interval):
        fixed = [fix]
    else:
        fixed = list(fix)
    for iv in [J, K, *fixed]:
        if not iv.within_unit():
            raise ConstructionError(f"{iv} is not inside [0, 1)")
    for iv in fixed:
        if iv.overlaps(J) or iv.overlaps(K):
            raise ConstructionError("fixed region meets the moved intervals")
    table = _affine_pairs(J, K)
    for iv in fixed:
        table.extend(((s, s) for s in std_cover(iv.lo, iv.hi)))
    left = [s for iv in _complement([J, *fixed]) for s in std_cover(iv.lo, iv.hi)]
    right = [s for iv in _complement([K, *fixed]) for s in std_cover(iv.lo, iv.hi)]
    if bool(left) != bool(right):
        raise ConstructionError("complements cannot be matched: exactly one is empty")
    while len(left) != len(right):
        _split_largest(left if len(left) < len(right) else right)
    table.extend(zip(left, right))
    return VElement(table)


def transplant(h: VElement, region: Interval) -> VElement:
    """Conjugate ``h`` into ``region`` by a dyadic PL homeomorphism; identity elsewhere."""
    targets = std_cover(region.lo, region.hi)
    sources = [(0, 0)]
    while len(sources) < len(targets):
        _split_largest(sources)
    psi = list(zip(sources, targets))
    psi_inv = [(d, s) for s, d in psi]
    inner = _compose_tables(h, psi_inv)
    psi_el = _PartialMap(psi)
    table = psi_el.compose_after(inner)
    table.extend((s, s) for iv in _complement([region]) for s in std_cover(iv.lo, iv.hi))
    return VElement(table)


class _PartialMap:
    """A bijection between two unions of standard intervals, for internal composition."""

    def __init__(self, table: list[Pair]):
        self.table = sorted(table, key=_sort_key_fn(table, 0))
        self._depth = max(s[1] for s, _ in self.table)
        self._keys = [s[0] << (self._depth - s[1]) for s, _ in self.table]

    _locate = VElement._locate

    def compose_after(self, g_table: Sequence[Pair]) -> list[Pair]:
        return _compose_tables(self, g_table)


# -- the generation witness --------------------------------------------------

@dataclass
class WitnessWord:
    """A word whose letters are tagged ``"G"`` (in G_i) or ``"Ga"`` (in G_i^{a_i})."""

    target: str
    letters: list[tuple[str, VElement]] = field(default_factory=list)

    def product(self) -> VElement:
        out = identity()
        for _, g in self.letters:
            out = out * g
        return out


def letter_ok(tag: str, g: VElement, i: int) -> bool:
    if tag == "G":
        return in_level(g, i)
    if tag == "Ga":
        return fixes_pointwise(g, swap_interval(i))
    raise ValueError(f"unknown tag {tag!r}")


def generation_witness(i: int) -> dict[str, WitnessWord]:
    """Words in ``G_i`` and ``G_i^{a_i}`` spelling A, B, C and pi0."""
    if i < 1:
        raise ValueError("i must be >= 1")
    fix = level_interval(i)
    hole = swap_interval(i)
    q = Fraction

    def through(J: Interval, g: VElement) -> list[tuple[str, VElement]]:
        # g fixes J pointwise; D moves J onto the hole so D g D^-1 lies in G_i^{a_i}
        D = transporter(J, hole, fix)
        Dinv = D.inverse()
        return [("G", Dinv), ("Ga", D * g * Dinv), ("G", D)]

    pi0_word = through(Interval.parse(q(3, 4), 1), PI0)
    a_rest = B.inverse() * A
    c_rest = PI0.inverse() * C
    return {
        "B": WitnessWord("B", [("G", B)]),
        "pi0": WitnessWord("pi0", pi0_word),
        "A": WitnessWord("A", [("G", B)] + through(Interval.parse(q(7, 8), 1), a_rest)),
        "C": WitnessWord("C", pi0_word + through(Interval.parse(q(1, 2), q(3, 4)), c_rest)),
    }


def swap_halves(region: Interval) -> VElement:
    """The involution exchanging the two halves of a standard interval by translation."""
    if not region.is_standard():
        raise ConstructionError(f"{region} is not a standard dyadic interval")
    lo, hi = region.lo, region.hi
    mid = lo + region.length.scale2(-1)
    pieces = [(lo, mid, mid, hi), (mid, hi, lo, mid)]
    if ZERO < lo:
        pieces.append((ZERO, lo, ZERO, lo))
    if hi < ONE:
        pieces.append((hi, ONE, hi, ONE))
    return from_pieces(pieces)


# -- the failure of (P4) in V -------------------------------------------------

def p4_counterexample(i: int) -> tuple[VElement, dict]:
    """``c`` fixing ``[0, 3/2^(i+2))`` with ``c`` outside ``G_{i-1}`` and ``a_i c a_i^-1`` in ``G_{i+1}``.

    ``c`` swaps the two halves of ``[3/2^(i+2), 1/2^i)``.
    """
    if i < 1:
        raise ValueError("i must be >= 1")
    c = swap_halves(Interval(Dyadic(3, i + 2), Dyadic(1, i)))
    return c, p4_certificate(i, c)


def p4_certificate(i: int, c: VElement) -> dict:
    ai = a(i)
    conj = ai * c * ai.inverse()
    return {
        "i": i,
        "fixes_[0,3/2^(i+2))": fixes_pointwise(c, Interval(ZERO, Dyadic(3, i + 2))),
        "in_G_i": in_level(c, i),
        "in_G_i-1": in_level(c, i - 1),
        "conjugate_in_G_i+1": in_level(conj, i + 1),
        "c": c.to_json(),
        "conjugate": conj.to_json(),
    }


def certificate_holds(cert: dict) -> bool:
    """Re-derive every claim from the serialized ``c`` rather than trusting the stored flags."""
    i = cert["i"]
    c = VElement.from_json(cert["c"])
    fresh = p4_certificate(i, c)
    if fresh["conjugate"] != cert["conjugate"]:
        return False
    return fresh["in_G_i"] and not fresh["in_G_i-1"] and fresh["conjugate_in_G_i+1"]


# -- sampling ----------------------------------------------------------------

_LETTERS = [A, B, C, PI0, A.inverse(), B.inverse(), C.inverse(), PI0.inverse()]


def random_word_element(rng: random.Random, depth: int) -> VElement:
    out = identity()
    for _ in range(depth):
        out = out * rng.choice(_LETTERS)
    return out


def random_element(seed: int, depth: int) -> VElement:
    """Deterministic product of ``depth`` random letters from A, B, C, pi0 and inverses."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    return random_word_element(random.Random(seed), depth)


def random_level_element(rng: random.Random, i: int, depth: int = 5) -> VElement:
    """A random element of ``G_i`` (supported in ``[1/2^(i+1), 1)``)."""
    h = random_word_element(rng, depth)
    return transplant(h, Interval(Dyadic(1, i + 1), ONE))


def is_canonical(f: VElement) -> bool:
    """Invariant checker used by tests: partitions, sortedness, slopes, no mergeable neighbours."""
    table = f.table
    _check_partition([s for s, _ in table])
    _check_partition([d for _, d in table])
    key = _sort_key_fn(table, 0)
    if [key(p) for p in table] != sorted(key(p) for p in table):
        return False
    return not any(_mergeable(p, q) for p, q in zip(table, table[1:]))

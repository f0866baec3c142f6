"""The data (M, {G_i}, {a_i}) consumed by the amalgam, tree and fold modules.

A system bundles group operations on M, a decision procedure for membership
in each G_i, the elements a_i, and samplers.  The copy maps into M_i are not
objects: an element of M_i is an element of M carried on a syllable whose tag
names the copy.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Any, Hashable, Iterable

from . import thompson as V

PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"


class GuardExceeded(RuntimeError):
    """An enumeration grew past its size guard."""


@dataclass
class CheckReport:
    check: str
    params: dict
    status: str
    witness: Any = None
    samples: int = 0
    seed: int | None = None
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.status != FAIL

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "params": self.params,
            "status": self.status,
            "witness": self.witness,
            "samples": self.samples,
            "seed": self.seed,
            "note": self.note,
        }

    def line(self) -> str:
        params = " ".join(f"{k}={v}" for k, v in self.params.items())
        text = f"{self.status:<12} {self.check} {params}"
        if self.note:
            text += f"  ({self.note})"
        return text


def bfs_closure(generators: Iterable, identity: Hashable, guard: int = 10**6) -> set:
    """All products of the generators, by breadth-first search (inverses come free in finite groups)."""
    gens = list(generators)
    seen = {identity}
    queue = deque([identity])
    while queue:
        g = queue.popleft()
        for s in gens:
            h = g * s
            if h not in seen:
                seen.add(h)
                if len(seen) > guard:
                    raise GuardExceeded(f"closure exceeded {guard} elements")
                queue.append(h)
    return seen


class PSystem:
    """Interface for a P-system.  Elements must be hashable and support ``*`` and ``inverse()``."""

    name = "abstract"
    depth: int | None = None  # largest i with a_i available; None means unbounded

    def identity(self):
        raise NotImplementedError

    def mul(self, g, h):
        return g * h

    def inv(self, g):
        return g.inverse()

    def is_identity(self, g) -> bool:
        return g == self.identity()

    def in_level(self, g, i: int) -> bool:
        raise NotImplementedError

    def a(self, i: int):
        raise NotImplementedError

    def sample(self, rng: random.Random):
        """A random element of M."""
        raise NotImplementedError

    def sample_level(self, rng: random.Random, i: int):
        """A random element of G_i."""
        raise NotImplementedError

    def elements(self) -> list | None:
        """All of M for finite systems, else None."""
        return None

    def level_elements(self, i: int) -> list | None:
        els = self.elements()
        if els is None:
            return None
        return [g for g in els if self.in_level(g, i)]

    def level_generators(self, i: int) -> list | None:
        return None

    def generation_witness(self, i: int):
        return None

    def p4_seed(self, i: int):
        return None

    def to_json(self, g) -> Any:
        raise NotImplementedError

    def from_json(self, data):
        raise NotImplementedError

    def describe(self, g) -> str:
        return str(g)

    def max_stage(self) -> int | None:
        """Largest stage whose tree exists (its edge group is G_{stage-1})."""
        return None if self.depth is None else self.depth + 1

    def check_stage(self, i: int) -> None:
        top = self.max_stage()
        if i < 1 or (top is not None and i > top):
            raise ValueError(f"stage {i} is outside 1..{top} for system {self.name}")

    def sample_outside_level(self, rng: random.Random, i: int, tries: int = 1000):
        for _ in range(tries):
            g = self.sample(rng)
            if not self.in_level(g, i):
                return g
        raise RuntimeError(f"could not sample an element outside G_{i}")

    def sample_level_difference(self, rng: random.Random, i: int, tries: int = 1000):
        """A random element of G_i \\ G_{i-1}."""
        for _ in range(tries):
            g = self.sample_level(rng, i)
            if not self.in_level(g, i - 1):
                return g
        raise RuntimeError(f"could not sample an element of G_{i} outside G_{i-1}")


class ThompsonSystem(PSystem):
    """V with G_i the pointwise stabilizer of [0, 1/2^(i+1)) and a_i as in the thompson module."""

    name = "thompson"
    depth = None

    def __init__(self, word_depth: int = 6):
        self.word_depth = word_depth
        self._a: dict[int, V.VElement] = {}

    def identity(self):
        return V.identity()

    def in_level(self, g, i):
        return V.in_level(g, i)

    def a(self, i):
        if i not in self._a:
            self._a[i] = V.a(i)
        return self._a[i]

    def sample(self, rng):
        return V.random_word_element(rng, rng.randint(1, self.word_depth))

    def sample_level(self, rng, i):
        return V.random_level_element(rng, i, rng.randint(1, self.word_depth))

    def generation_witness(self, i):
        return V.generation_witness(i)

    def p4_seed(self, i):
        return V.p4_counterexample(i)[0]

    def to_json(self, g):
        return g.to_json()

    def from_json(self, data):
        return V.VElement.from_json(data)

    def describe(self, g):
        return " ".join(f"{s}->{d}" for s, d in g.pairs)


class OverriddenA(PSystem):
    """Wrap a system, replacing a_i by a fixed element (used as a negative control)."""

    def __init__(self, base: PSystem, element):
        self.base = base
        self.element = element
        self.name = f"{base.name}[a:=override]"
        self.depth = base.depth

    def a(self, i):
        return self.element

    def __getattr__(self, item):
        return getattr(self.base, item)

    def identity(self):
        return self.base.identity()

    def in_level(self, g, i):
        return self.base.in_level(g, i)

    def sample(self, rng):
        return self.base.sample(rng)

    def sample_level(self, rng, i):
        return self.base.sample_level(rng, i)

    def elements(self):
        return self.base.elements()

    def level_generators(self, i):
        return self.base.level_generators(i)

    def to_json(self, g):
        return self.base.to_json(g)

    def from_json(self, data):
        return self.base.from_json(data)


def _level_source(sys: PSystem, i: int, samples: int, rng: random.Random) -> tuple[list, str]:
    exhaustive = sys.level_elements(i)
    if exhaustive is not None:
        return exhaustive, "exhaustive"
    return [sys.sample_level(rng, i) for _ in range(samples)], "sampled"


def check_P1(sys: PSystem, i: int, samples: int = 100, seed: int = 0) -> CheckReport:
    """a_i commutes with every (sampled) element of G_{i-1}."""
    params = {"system": sys.name, "i": i}
    if sys.depth is not None and i > sys.depth:
        return CheckReport("P1", params, INCONCLUSIVE, note=f"no a_{i} at depth {sys.depth}", seed=seed)
    rng = random.Random(seed)
    try:
        pool, mode = _level_source(sys, i - 1, samples, rng)
    except NotImplementedError:
        return CheckReport("P1", params, INCONCLUSIVE, note="no sampler for G_{i-1}", seed=seed)
    ai = sys.a(i)
    for g in pool:
        if sys.mul(ai, g) != sys.mul(g, ai):
            return CheckReport("P1", params, FAIL, witness={"g": sys.to_json(g), "a_i": sys.to_json(ai)},
                               samples=len(pool), seed=seed, note="a_i g != g a_i")
    note = f"exhaustive over {len(pool)} elements" if mode == "exhaustive" else f"verified on {len(pool)} samples"
    return CheckReport("P1", params, PASS, samples=len(pool), seed=seed, note=note)


def verify_witness_words(words: dict, i: int) -> tuple[bool, dict]:
    detail = {}
    ok = True
    for name, word in words.items():
        letters_ok = all(V.letter_ok(tag, g, i) for tag, g in word.letters)
        product_ok = word.product() == V.generator(name)
        detail[name] = {"letters": [tag for tag, _ in word.letters], "letters_ok": letters_ok, "product_ok": product_ok}
        ok = ok and letters_ok and product_ok
    return ok, detail


def check_P2(sys: PSystem, i: int) -> CheckReport:
    """M is generated by G_i together with its a_i-conjugate."""
    params = {"system": sys.name, "i": i}
    if sys.depth is not None and i > sys.depth:
        return CheckReport("P2", params, INCONCLUSIVE, note=f"no a_{i} at depth {sys.depth}")
    words = sys.generation_witness(i)
    if words is not None:
        ok, detail = verify_witness_words(words, i)
        status = PASS if ok else FAIL
        return CheckReport("P2", params, status, witness=detail, samples=len(words),
                           note="witnessed: every generator of M spelled in G_i and G_i^{a_i}")
    gens = sys.level_generators(i)
    everything = sys.elements()
    if gens is None or everything is None:
        return CheckReport("P2", params, INCONCLUSIVE, note="neither a witness scheme nor enumeration available")
    ai = sys.a(i)
    ai_inv = sys.inv(ai)
    conj = [sys.mul(sys.mul(ai, g), ai_inv) for g in gens]
    closure = bfs_closure(gens + conj, sys.identity())
    if len(closure) == len(everything):
        return CheckReport("P2", params, PASS, samples=len(closure),
                           note=f"closure has all {len(closure)} elements of M")
    missing = next(g for g in everything if g not in closure)
    return CheckReport("P2", params, FAIL, witness={"closure_order": len(closure), "order_M": len(everything),
                                                    "missing": sys.to_json(missing)},
                       samples=len(closure), note=f"closure has {len(closure)} of {len(everything)} elements")


def p4_violation(sys: PSystem, i: int, c, n_max: int) -> dict | None:
    """Containment witness: a conjugate of c by a_i^{+-1} lying in some G_n with i <= n <= n_max."""
    ai = sys.a(i)
    ai_inv = sys.inv(ai)
    for label, d in (("a_i c a_i^-1", sys.mul(sys.mul(ai, c), ai_inv)),
                     ("a_i^-1 c a_i", sys.mul(sys.mul(ai_inv, c), ai))):
        for n in range(i, n_max + 1):
            if sys.in_level(d, n):
                return {"c": sys.to_json(c), "conjugate": label, "n": n, "conjugate_element": sys.to_json(d)}
    return None


def check_P4_search(sys: PSystem, i: int, budget: int = 200, seed: int = 0, n_max: int | None = None) -> CheckReport:
    """Search G_i \\ G_{i-1} for an element refuting (P4) by a containment in some G_n."""
    params = {"system": sys.name, "i": i, "budget": budget}
    if sys.depth is not None and i > sys.depth - 1:
        return CheckReport("P4", params, INCONCLUSIVE, seed=seed,
                           note=f"depth {sys.depth} has no level above G_{i}")
    if n_max is None:
        n_max = sys.depth if sys.depth is not None else i + 4
    rng = random.Random(seed)
    candidates = []
    seeded = sys.p4_seed(i)
    if seeded is not None:
        candidates.append(seeded)
    tried = 0
    while tried < budget:
        if candidates:
            c = candidates.pop()
        else:
            c = sys.sample_level(rng, i)
        tried += 1
        if not sys.in_level(c, i) or sys.in_level(c, i - 1):
            continue
        found = p4_violation(sys, i, c, n_max)
        if found is not None:
            return CheckReport("P4", params, FAIL, witness=found, samples=tried, seed=seed,
                               note=f"witnessed: <G_i, G_i^d> lies in G_{found['n']}")
    return CheckReport("P4", params, INCONCLUSIVE, samples=tried, seed=seed,
                       note=f"no violation among {tried} candidates; (P4) cannot be confirmed by sampling")


def recheck_p4_witness(sys: PSystem, i: int, witness: dict) -> bool:
    """Re-run a (P4) containment witness from its serialized form."""
    c = sys.from_json(witness["c"])
    if not sys.in_level(c, i) or sys.in_level(c, i - 1):
        return False
    ai = sys.a(i)
    if witness["conjugate"] == "a_i c a_i^-1":
        d = sys.mul(sys.mul(ai, c), sys.inv(ai))
    else:
        d = sys.mul(sys.mul(sys.inv(ai), c), ai)
    return sys.in_level(d, witness["n"]) and witness["n"] >= i


def intersection_law(sys: PSystem, i: int, samples: int = 100, seed: int = 0) -> CheckReport:
    """G_i meets its a_i-conjugate exactly in G_{i-1}, tested on samples (exhaustively when finite)."""
    params = {"system": sys.name, "i": i}
    rng = random.Random(seed)
    ai = sys.a(i)
    ai_inv = sys.inv(ai)
    pool = sys.elements()
    mode = "exhaustive"
    if pool is None:
        mode = "sampled"
        pool = []
        for _ in range(samples):
            pool.append(sys.sample(rng))
            pool.append(sys.sample_level(rng, i))
            pool.append(sys.sample_level(rng, i - 1))
            g = sys.sample_level(rng, i)
            pool.append(sys.mul(sys.mul(ai, g), ai_inv))
    for g in pool:
        lhs = sys.in_level(g, i) and sys.in_level(sys.mul(sys.mul(ai_inv, g), ai), i)
        if lhs != sys.in_level(g, i - 1):
            return CheckReport("intersection-law", params, FAIL, witness={"g": sys.to_json(g)},
                               samples=len(pool), seed=seed)
    note = f"exhaustive over {len(pool)} elements" if mode == "exhaustive" else f"verified on {len(pool)} samples"
    return CheckReport("intersection-law", params, PASS, samples=len(pool), seed=seed, note=note)

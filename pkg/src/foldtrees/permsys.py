"""Finite chains G_0 < G_1 < ... and desk-scale P-systems built from them.

Permutations act on ``{1..degree}`` and multiply as functions:
``(p * q)(x) = p(q(x))``.  Unitriangular matrices live over a prime field
and multiply as matrices.  Everything is enumerated by brute force under a
size guard.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .psystem import FAIL, PASS, CheckReport, GuardExceeded, PSystem, bfs_closure

GUARD = 10**6


@dataclass(frozen=True)
class Perm:
    images: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(self.images))
        if sorted(self.images) != list(range(1, len(self.images) + 1)):
            raise ValueError(f"{self.images} is not a permutation")

    @property
    def degree(self) -> int:
        return len(self.images)

    @classmethod
    def identity(cls, degree: int) -> "Perm":
        return cls(tuple(range(1, degree + 1)))

    @classmethod
    def from_cycles(cls, degree: int, *cycles: Iterable[int]) -> "Perm":
        images = list(range(1, degree + 1))
        for cycle in cycles:
            cycle = list(cycle)
            for x, y in zip(cycle, cycle[1:] + cycle[:1]):
                images[x - 1] = y
        return cls(tuple(images))

    def __call__(self, x: int) -> int:
        return self.images[x - 1]

    def __mul__(self, other: "Perm") -> "Perm":
        im = self.images
        return Perm._raw(tuple(im[y - 1] for y in other.images))

    @classmethod
    def _raw(cls, images: tuple[int, ...]) -> "Perm":
        p = object.__new__(cls)
        object.__setattr__(p, "images", images)
        return p

    def inverse(self) -> "Perm":
        out = [0] * len(self.images)
        for x, y in enumerate(self.images, start=1):
            out[y - 1] = x
        return Perm._raw(tuple(out))

    def is_identity(self) -> bool:
        return all(y == x for x, y in enumerate(self.images, start=1))

    def is_even(self) -> bool:
        seen = set()
        parity = 0
        for start in range(1, self.degree + 1):
            if start in seen:
                continue
            length = 0
            x = start
            while x not in seen:
                seen.add(x)
                x = self(x)
                length += 1
            parity += length - 1
        return parity % 2 == 0

    def extend(self, degree: int) -> "Perm":
        """The same permutation on a larger point set, fixing the new points."""
        return Perm._raw(self.images + tuple(range(self.degree + 1, degree + 1)))

    def cycles(self) -> list[tuple[int, ...]]:
        seen = set()
        out = []
        for start in range(1, self.degree + 1):
            if start in seen or self(start) == start:
                continue
            cyc = []
            x = start
            while x not in seen:
                seen.add(x)
                cyc.append(x)
                x = self(x)
            out.append(tuple(cyc))
        return out

    def __str__(self):
        cycles = self.cycles()
        if not cycles:
            return "()"
        return "".join("(" + " ".join(map(str, c)) + ")" for c in cycles)

    def to_json(self) -> dict:
        return {"images": list(self.images)}

    @classmethod
    def from_json(cls, data: dict) -> "Perm":
        return cls(tuple(data["images"]))


@dataclass(frozen=True)
class Matrix:
    """A square matrix over F_p stored as a tuple of rows."""

    rows: tuple[tuple[int, ...], ...]
    p: int = 2

    @property
    def dim(self) -> int:
        return len(self.rows)

    @classmethod
    def identity(cls, dim: int, p: int = 2) -> "Matrix":
        return cls(tuple(tuple(int(r == c) for c in range(dim)) for r in range(dim)), p)

    @classmethod
    def elementary(cls, dim: int, row: int, col: int, value: int = 1, p: int = 2) -> "Matrix":
        rows = [list(r) for r in cls.identity(dim, p).rows]
        rows[row][col] = value % p
        return cls(tuple(map(tuple, rows)), p)

    def __mul__(self, other: "Matrix") -> "Matrix":
        p = self.p
        cols = list(zip(*other.rows))
        return Matrix(tuple(tuple(sum(a * b for a, b in zip(r, c)) % p for c in cols) for r in self.rows), p)

    def inverse(self) -> "Matrix":
        n, p = self.dim, self.p
        aug = [list(r) + [int(i == j) for j in range(n)] for i, r in enumerate(self.rows)]
        for col in range(n):
            pivot = next((r for r in range(col, n) if aug[r][col] % p), None)
            if pivot is None:
                raise ValueError("singular matrix")
            aug[col], aug[pivot] = aug[pivot], aug[col]
            inv = pow(aug[col][col], -1, p)
            aug[col] = [x * inv % p for x in aug[col]]
            for r in range(n):
                if r != col and aug[r][col]:
                    f = aug[r][col]
                    aug[r] = [(x - f * y) % p for x, y in zip(aug[r], aug[col])]
        return Matrix(tuple(tuple(r[n:]) for r in aug), p)

    def is_identity(self) -> bool:
        return self == Matrix.identity(self.dim, self.p)

    def extend(self, dim: int) -> "Matrix":
        """Block-diagonal embedding fixing the new standard basis vectors."""
        rows = [list(r) + [0] * (dim - self.dim) for r in self.rows]
        for k in range(self.dim, dim):
            rows.append([int(j == k) for j in range(dim)])
        return Matrix(tuple(map(tuple, rows)), self.p)

    def __str__(self):
        return "[" + ";".join("".join(map(str, r)) for r in self.rows) + "]"

    def to_json(self) -> dict:
        return {"p": self.p, "rows": [list(r) for r in self.rows]}

    @classmethod
    def from_json(cls, data: dict) -> "Matrix":
        return cls(tuple(tuple(r) for r in data["rows"]), data["p"])


class FiniteGroup:
    """A finite group given by generators; the element set is computed on demand."""

    def __init__(self, generators: list, identity, name: str = "", guard: int = GUARD):
        self.generators = list(generators)
        self.identity = identity
        self.name = name
        self.guard = guard
        self._elements: frozenset | None = None

    def enumerate(self) -> frozenset:
        if self._elements is None:
            self._elements = frozenset(bfs_closure(self.generators, self.identity, self.guard))
        return self._elements

    @property
    def order(self) -> int:
        return len(self.enumerate())

    def __contains__(self, g) -> bool:
        return g in self.enumerate()

    def conjugacy_orbit(self, subset: Iterable, stop: Callable | None = None) -> tuple[set, object]:
        """All G-conjugates of ``subset``; also returns the first one satisfying ``stop``, if any."""
        pairs = [(s, s.inverse()) for s in self.generators]
        orbit = set()
        queue = deque()
        for g in subset:
            if g not in orbit:
                orbit.add(g)
                queue.append(g)
                if stop is not None and stop(g):
                    return orbit, g
        while queue:
            h = queue.popleft()
            for s, s_inv in pairs:
                k = s * h * s_inv
                if k not in orbit:
                    orbit.add(k)
                    if len(orbit) > self.guard:
                        raise GuardExceeded(f"conjugacy orbit exceeded {self.guard} elements")
                    if stop is not None and stop(k):
                        return orbit, k
                    queue.append(k)
        return orbit, None

    def normal_closure(self, subset: Iterable) -> frozenset:
        """Smallest normal subgroup containing ``subset``: the closure of its conjugacy orbit."""
        orbit, _ = self.conjugacy_orbit(subset)
        return frozenset(bfs_closure(orbit, self.identity, self.guard))

    def __repr__(self):
        return f"FiniteGroup({self.name or len(self.generators)})"



def symmetric_group(n: int, degree: int | None = None) -> FiniteGroup:
    degree = degree or n
    gens = [Perm.from_cycles(degree, (k, k + 1)) for k in range(1, n)]
    return FiniteGroup(gens, Perm.identity(degree), f"Sym({n})")


def alternating_group(n: int, degree: int | None = None) -> FiniteGroup:
    degree = degree or n
    gens = [Perm.from_cycles(degree, (1, 2, k)) for k in range(3, n + 1)]
    return FiniteGroup(gens, Perm.identity(degree), f"Alt({n})")


def unitriangular_group(n: int, p: int = 2) -> FiniteGroup:
    gens = [Matrix.elementary(n, k, k + 1, 1, p) for k in range(n - 1)]
    return FiniteGroup(gens, Matrix.identity(n, p), f"UT({n},F{p})")


@dataclass
class ChainSpec:
    """A chain of finite groups with embeddings ``embed(g, i)`` from G_{i-1} into G_i."""

    kind: str
    build: Callable[[int], FiniteGroup]
    embed: Callable[[object, int], object]
    _cache: dict = field(default_factory=dict, repr=False)

    def level(self, i: int) -> FiniteGroup:
        if i not in self._cache:
            self._cache[i] = self.build(i)
        return self._cache[i]

    def embedded_previous(self, i: int) -> frozenset:
        """The image of G_{i-1} inside G_i."""
        return frozenset(self.embed(g, i) for g in self.level(i - 1).enumerate())


def alt_chain() -> ChainSpec:
    """G_0 trivial and G_i = Alt(i+4), each fixing the last point of the next."""

    def build(i: int) -> FiniteGroup:
        if i == 0:
            return FiniteGroup([], Perm.identity(4), "1")
        return alternating_group(i + 4)

    return ChainSpec("alt", build, lambda g, i: g.extend(i + 4))


def ut_chain(p: int = 2) -> ChainSpec:
    """G_0 trivial and G_i = UT(i+2, F_p), each the stabilizer of the last basis vector of the next."""

    def build(i: int) -> FiniteGroup:
        if i == 0:
            return FiniteGroup([], Matrix.identity(2, p), "1")
        return unitriangular_group(i + 2, p)

    return ChainSpec("ut", build, lambda g, i: g.extend(i + 2))


def cyclic_chain() -> ChainSpec:
    """C_2 < C_4 inside Sym(4); a negative control, since C_2 is normal in C_4."""

    def build(i: int) -> FiniteGroup:
        if i == 0:
            return FiniteGroup([Perm.from_cycles(4, (1, 3), (2, 4))], Perm.identity(4), "C2")
        if i == 1:
            return FiniteGroup([Perm.from_cycles(4, (1, 2, 3, 4))], Perm.identity(4), "C4")
        raise ValueError("the cyclic control chain has only levels 0 and 1")

    return ChainSpec("custom", build, lambda g, i: g)


CHAINS = {"alt-chain": alt_chain, "ut-chain": ut_chain, "custom": cyclic_chain}


def condition51(chain: ChainSpec, i: int) -> CheckReport:
    """No nontrivial normal subgroup of G_i lies inside G_{i-1}.

    Equivalently every nontrivial g in G_{i-1} has a G_i-conjugate outside
    G_{i-1}; a g without one generates a forbidden normal subgroup.
    """
    params = {"chain": chain.kind, "i": i}
    group = chain.level(i)
    prev = chain.embedded_previous(i)
    escaped: set = set()
    for g in sorted(prev, key=str):
        if g == group.identity or g in escaped:
            continue
        orbit, hit = group.conjugacy_orbit([g], stop=lambda k: k not in prev)
        if hit is None:
            closure = group.normal_closure([g])
            return CheckReport("condition51", params, FAIL, witness={
                "g": g.to_json(), "g_str": str(g), "normal_closure_order": len(closure),
            }, samples=len(prev), note=f"normal closure of {g} stays inside G_{i-1}")
        escaped.update(orbit & prev)
    return CheckReport("condition51", params, PASS, samples=len(prev),
                       note=f"exhaustive over {len(prev)} elements of G_{i-1}")


class FinitePSystem(PSystem):
    """M = Sym(degree), G_i the stabilizer of the points above i+4, a_i = (i+4 i+5)."""

    def __init__(self, degree: int = 6):
        if degree < 6:
            raise ValueError("degree must be at least 6")
        self.degree = degree
        self.depth = degree - 5
        self.name = f"sym{degree}"
        self._elements = sorted(symmetric_group(degree).enumerate(), key=lambda p: p.images)
        self._levels: dict[int, list] = {}

    def identity(self):
        return Perm.identity(self.degree)

    def in_level(self, g, i):
        return all(g.images[x - 1] == x for x in range(i + 5, self.degree + 1))

    def a(self, i):
        if not 1 <= i <= self.depth:
            raise ValueError(f"a_{i} is not defined at depth {self.depth}")
        return Perm.from_cycles(self.degree, (i + 4, i + 5))

    def elements(self):
        return self._elements

    def level_elements(self, i):
        if i not in self._levels:
            self._levels[i] = [g for g in self._elements if self.in_level(g, i)]
        return self._levels[i]

    def level_generators(self, i):
        return [Perm.from_cycles(self.degree, (k, k + 1)) for k in range(1, min(i + 4, self.degree))]

    def sample(self, rng):
        return rng.choice(self._elements)

    def sample_level(self, rng, i):
        return rng.choice(self.level_elements(i))

    def to_json(self, g):
        return g.to_json()

    def from_json(self, data):
        return Perm.from_json(data)

    def describe(self, g):
        return str(g)


def finite_psystem(degree: int = 6) -> FinitePSystem:
    """The truncated system on Sym(degree); degree 6 is the depth-1 oracle system."""
    return FinitePSystem(degree)

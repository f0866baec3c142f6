"""Exact dyadic rationals and half-open intervals with dyadic endpoints."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering


def _normalize(num: int, exp: int) -> tuple[int, int]:
    if num == 0:
        return 0, 0
    while exp > 0 and num % 2 == 0:
        num //= 2
        exp -= 1
    while exp < 0:
        num *= 2
        exp += 1
    return num, exp


@total_ordering
@dataclass(frozen=True, init=False)
class Dyadic:
    """The number ``num / 2**exp`` kept in lowest terms."""

    num: int
    exp: int

    def __init__(self, num: int = 0, exp: int = 0):
        n, e = _normalize(int(num), int(exp))
        object.__setattr__(self, "num", n)
        object.__setattr__(self, "exp", e)

    @classmethod
    def of(cls, value) -> "Dyadic":
        """Coerce an int, Fraction, Dyadic or ``"p/q"`` string."""
        if isinstance(value, Dyadic):
            return value
        if isinstance(value, str):
            value = Fraction(value)
        if isinstance(value, int):
            return cls(value, 0)
        if isinstance(value, Fraction):
            q = value.denominator
            if q & (q - 1):
                raise ValueError(f"{value} is not a dyadic rational")
            return cls(value.numerator, q.bit_length() - 1)
        raise TypeError(f"cannot make a Dyadic from {value!r}")

    @classmethod
    def pow2(cls, k: int) -> "Dyadic":
        """``2**k`` for any integer k."""
        return cls(1 << k, 0) if k >= 0 else cls(1, -k)

    def _align(self, other: "Dyadic") -> tuple[int, int, int]:
        e = max(self.exp, other.exp)
        return self.num << (e - self.exp), other.num << (e - other.exp), e

    def __add__(self, other):
        other = Dyadic.of(other)
        a, b, e = self._align(other)
        return Dyadic(a + b, e)

    __radd__ = __add__

    def __sub__(self, other):
        other = Dyadic.of(other)
        a, b, e = self._align(other)
        return Dyadic(a - b, e)

    def __rsub__(self, other):
        return Dyadic.of(other) - self

    def __neg__(self):
        return Dyadic(-self.num, self.exp)

    def __abs__(self):
        return Dyadic(abs(self.num), self.exp)

    def __mul__(self, other):
        other = Dyadic.of(other)
        return Dyadic(self.num * other.num, self.exp + other.exp)

    __rmul__ = __mul__

    def scale2(self, k: int) -> "Dyadic":
        """Multiply by ``2**k``."""
        return Dyadic(self.num, self.exp - k)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Dyadic)):
            other = Dyadic.of(other)
            return self.num == other.num and self.exp == other.exp
        return NotImplemented

    def __lt__(self, other):
        other = Dyadic.of(other)
        a, b, _ = self._align(other)
        return a < b

    def __hash__(self):
        return hash((self.num, self.exp))

    def floor_scaled(self, k: int) -> int:
        """``floor(self * 2**k)``."""
        if k >= self.exp:
            return self.num << (k - self.exp)
        return self.num >> (self.exp - k)

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def to_pair(self) -> list[int]:
        return [self.num, self.exp]

    @classmethod
    def from_pair(cls, pair) -> "Dyadic":
        num, exp = pair
        if exp < 0:
            raise ValueError("negative exponent")
        d = cls(num, exp)
        if (d.num, d.exp) != (num, exp):
            raise ValueError(f"[{num}, {exp}] is not in canonical form")
        return d

    def __str__(self):
        if self.exp == 0:
            return str(self.num)
        return f"{self.num}/{1 << self.exp}"

    def __repr__(self):
        return f"Dyadic({self})"


ZERO = Dyadic(0)
ONE = Dyadic(1)


@dataclass(frozen=True)
class Interval:
    """Half-open interval ``[lo, hi)`` with dyadic endpoints."""

    lo: Dyadic
    hi: Dyadic

    def __post_init__(self):
        object.__setattr__(self, "lo", Dyadic.of(self.lo))
        object.__setattr__(self, "hi", Dyadic.of(self.hi))
        if not self.lo < self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi})")

    @classmethod
    def parse(cls, lo, hi) -> "Interval":
        return cls(Dyadic.of(lo), Dyadic.of(hi))

    @property
    def length(self) -> Dyadic:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        x = Dyadic.of(x)
        return self.lo <= x < self.hi

    def overlaps(self, other: "Interval") -> bool:
        return self.lo < other.hi and other.lo < self.hi

    def is_standard(self) -> bool:
        """True for intervals of the form ``[k/2^n, (k+1)/2^n)``."""
        length = self.length
        if length.num != 1:
            return False
        return self.lo.exp <= length.exp

    def within_unit(self) -> bool:
        return ZERO <= self.lo and self.hi <= ONE

    def __str__(self):
        return f"[{self.lo}, {self.hi})"

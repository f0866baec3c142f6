"""Word calculus for amalgams ``M *_C M_k`` and their HNN extensions.

A word is a sequence of syllables.  A group syllable carries a tag (0 for the
base factor M, k for the copy M_k) and an element of M; the copy map is just
the change of tag.  A stable-letter syllable has tag ``"t"`` and its exponent
as payload.  The stable letter conjugates the associated subgroup by the
identity map, so ``t g t^-1 = g`` for g in that subgroup.

Reduction is a single left-to-right stack pass: adjacent syllables of one
factor are merged, a syllable lying in the edge group C is retagged into its
neighbour's factor and merged, and stable letters cancel or pinch.  Reduced
words are not unique (payloads may shift by elements of C between
neighbours), but their tag sequence is, and a reduced word is the identity
exactly when it is empty.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any, Callable, Iterable

from .psystem import PSystem

T = "t"


@dataclass(frozen=True)
class Syllable:
    tag: int | str
    payload: Any

    @property
    def is_letter(self) -> bool:
        return self.tag == T


@dataclass(frozen=True)
class GroupWord:
    stage: int
    syllables: tuple[Syllable, ...] = ()

    def __len__(self) -> int:
        return len(self.syllables)

    def tags(self) -> tuple:
        return tuple(s.tag for s in self.syllables)

    def __iter__(self):
        return iter(self.syllables)


class StageMismatch(ValueError):
    pass


class WordCalculus:
    """Reduction and arithmetic for words in ``A *_C B`` (plus an optional stable letter).

    ``edge`` decides membership in C; ``assoc`` decides membership in the
    subgroup centralized by the stable letter (None means no stable letter).
    """

    def __init__(self, stage: int, copy_tag: int, mul: Callable, inv: Callable, is_id: Callable,
                 edge: Callable, assoc: Callable | None = None, to_json: Callable | None = None,
                 describe: Callable = str):
        self.stage = stage
        self.copy_tag = copy_tag
        self._mul = mul
        self._inv = inv
        self._is_id = is_id
        self.edge = edge
        self.assoc = assoc
        self._to_json = to_json
        self._describe = describe

    # -- construction -----------------------------------------------------
    def word(self, *syllables: tuple) -> GroupWord:
        """Build a word from ``(tag, payload)`` pairs (no reduction)."""
        for tag, _ in syllables:
            if tag not in (0, self.copy_tag, T):
                raise ValueError(f"tag {tag!r} does not belong to stage {self.stage}")
            if tag == T and self.assoc is None:
                raise ValueError("this calculus has no stable letter")
        return GroupWord(self.stage, tuple(Syllable(t, p) for t, p in syllables))

    def base(self, g) -> GroupWord:
        return self.reduce(self.word((0, g)))

    def copy(self, g) -> GroupWord:
        return self.reduce(self.word((self.copy_tag, g)))

    def letter(self, exponent: int = 1) -> GroupWord:
        return self.word((T, exponent))

    def identity(self) -> GroupWord:
        return GroupWord(self.stage)

    def _check(self, *words: GroupWord) -> None:
        for w in words:
            if w.stage != self.stage:
                raise StageMismatch(f"word at stage {w.stage} given to stage-{self.stage} calculus")

    # -- reduction --------------------------------------------------------
    def _push(self, stack: list[Syllable], s: Syllable) -> None:
        while True:
            if s.tag == T:
                if stack and stack[-1].tag == T and stack[-1].payload == -s.payload:
                    stack.pop()
                    return
                if (len(stack) >= 2 and stack[-2].tag == T and stack[-2].payload == -s.payload
                        and stack[-1].tag != T and self.assoc(stack[-1].payload)):
                    g = stack.pop().payload
                    stack.pop()
                    s = Syllable(0, g)
                    continue
                stack.append(s)
                return
            if self._is_id(s.payload):
                return
            if not stack or stack[-1].tag == T:
                stack.append(s)
                return
            top = stack[-1]
            if top.tag == s.tag:
                stack.pop()
                s = Syllable(s.tag, self._mul(top.payload, s.payload))
                continue
            if self.edge(s.payload):
                s = Syllable(top.tag, s.payload)
                continue
            if self.edge(top.payload):
                stack.pop()
                s = Syllable(s.tag, self._mul(top.payload, s.payload))
                continue
            stack.append(s)
            return

    def _finish(self, stack: list[Syllable]) -> tuple[Syllable, ...]:
        out = []
        for k, s in enumerate(stack):
            if s.tag != T and s.tag != 0:
                left = stack[k - 1] if k > 0 else None
                right = stack[k + 1] if k + 1 < len(stack) else None
                isolated = (left is None or left.tag == T) and (right is None or right.tag == T)
                if isolated and self.edge(s.payload):
                    s = Syllable(0, s.payload)
            out.append(s)
        return tuple(out)

    def reduce(self, w: GroupWord) -> GroupWord:
        self._check(w)
        stack: list[Syllable] = []
        for s in w.syllables:
            self._push(stack, s)
        return GroupWord(self.stage, self._finish(stack))

    def reduce_randomized(self, w: GroupWord, rng: random.Random) -> GroupWord:
        """Apply the rewriting rules at random positions until none applies."""
        self._check(w)
        syl = list(w.syllables)
        while True:
            moves = self._moves(syl)
            if not moves:
                return GroupWord(self.stage, self._finish(syl))
            syl = rng.choice(moves)()

    def _moves(self, syl: list[Syllable]) -> list[Callable[[], list[Syllable]]]:
        moves = []
        n = len(syl)
        for k, s in enumerate(syl):
            if s.tag != T and self._is_id(s.payload):
                moves.append(lambda k=k: syl[:k] + syl[k + 1:])
        for k in range(n - 1):
            s, r = syl[k], syl[k + 1]
            if s.tag == T and r.tag == T:
                if s.payload == -r.payload:
                    moves.append(lambda k=k: syl[:k] + syl[k + 2:])
                continue
            if s.tag == T or r.tag == T:
                continue
            if s.tag == r.tag:
                moves.append(lambda k=k, s=s, r=r: syl[:k] + [Syllable(s.tag, self._mul(s.payload, r.payload))] + syl[k + 2:])
            else:
                if self.edge(r.payload):
                    moves.append(lambda k=k, s=s, r=r: syl[:k + 1] + [Syllable(s.tag, r.payload)] + syl[k + 2:])
                if self.edge(s.payload):
                    moves.append(lambda k=k, s=s, r=r: syl[:k] + [Syllable(r.tag, s.payload)] + syl[k + 1:])
        if self.assoc is not None:
            for k in range(n - 2):
                a, g, b = syl[k], syl[k + 1], syl[k + 2]
                if a.tag == T and b.tag == T and g.tag != T and a.payload == -b.payload and self.assoc(g.payload):
                    moves.append(lambda k=k, g=g: syl[:k] + [Syllable(0, g.payload)] + syl[k + 3:])
        return moves

    def is_reduced(self, w: GroupWord) -> bool:
        return self.reduce(w).tags() == w.tags() and len(self.reduce(w)) == len(w)

    # -- arithmetic -------------------------------------------------------
    def mul(self, *words: GroupWord) -> GroupWord:
        self._check(*words)
        stack: list[Syllable] = []
        for w in words:
            for s in w.syllables:
                self._push(stack, s)
        return GroupWord(self.stage, self._finish(stack))

    def inverse(self, w: GroupWord) -> GroupWord:
        self._check(w)
        out = []
        for s in reversed(w.syllables):
            out.append(Syllable(T, -s.payload) if s.tag == T else Syllable(s.tag, self._inv(s.payload)))
        return GroupWord(self.stage, tuple(out))

    def conjugate(self, h: GroupWord, g: GroupWord) -> GroupWord:
        """``g h g^-1``."""
        return self.mul(g, h, self.inverse(g))

    def power(self, w: GroupWord, k: int) -> GroupWord:
        if k < 0:
            w, k = self.inverse(w), -k
        out = self.identity()
        for _ in range(k):
            out = self.mul(out, w)
        return out

    def is_identity(self, w: GroupWord) -> bool:
        return len(self.reduce(w)) == 0

    def equal(self, u: GroupWord, w: GroupWord) -> bool:
        self._check(u, w)
        return len(self.mul(u, self.inverse(w))) == 0

    def in_factor(self, w: GroupWord, tag: int) -> bool:
        """True iff w lies in the factor with the given tag (C counts as part of both)."""
        r = self.reduce(w)
        if len(r) == 0:
            return True
        if len(r) > 1 or r.syllables[0].tag == T:
            return False
        s = r.syllables[0]
        return s.tag == tag or self.edge(s.payload)

    def in_edge_group(self, w: GroupWord) -> bool:
        r = self.reduce(w)
        return len(r) == 0 or (len(r) == 1 and r.syllables[0].tag != T and self.edge(r.syllables[0].payload))

    def order_probe(self, w: GroupWord, max_pow: int) -> "OrderProbe":
        """Exact order if some power up to ``max_pow`` is trivial, else the bound ``order > max_pow``."""
        w = self.reduce(w)
        if len(w) == 0:
            return OrderProbe(1, exact=True)
        acc = w
        lengths = [len(acc)]
        for k in range(2, max_pow + 1):
            acc = self.mul(acc, w)
            lengths.append(len(acc))
            if len(acc) == 0:
                return OrderProbe(k, exact=True, lengths=lengths)
        return OrderProbe(max_pow, exact=False, lengths=lengths)

    # -- output -----------------------------------------------------------
    def to_json(self, w: GroupWord) -> dict:
        syl = []
        for s in w.syllables:
            if s.tag == T:
                syl.append({"tag": T, "payload": s.payload})
            else:
                payload = self._to_json(s.payload) if self._to_json else str(s.payload)
                syl.append({"tag": s.tag, "payload": payload})
        return {"stage": w.stage, "syllables": syl}

    def describe(self, w: GroupWord) -> str:
        if not w.syllables:
            return "1"
        parts = []
        for s in w.syllables:
            if s.tag == T:
                parts.append("t" if s.payload == 1 else "t^-1")
            else:
                name = "M" if s.tag == 0 else f"M{s.tag}"
                parts.append(f"[{name}:{self._describe(s.payload)}]")
        return "".join(parts)


@dataclass
class OrderProbe:
    value: int
    exact: bool
    lengths: list[int] | None = None

    def __str__(self):
        return f"order = {self.value}" if self.exact else f"order > {self.value}"


def amalgam(sys: PSystem, stage: int) -> WordCalculus:
    """The calculus of ``L_stage = M *_{G_{stage-1}} M_stage``."""
    sys.check_stage(stage)
    return WordCalculus(
        stage=stage, copy_tag=stage, mul=sys.mul, inv=sys.inv, is_id=sys.is_identity,
        edge=lambda g, lvl=stage - 1: sys.in_level(g, lvl),
        to_json=sys.to_json, describe=sys.describe,
    )


def word_from_json(calc: WordCalculus, data: dict, element_from_json: Callable) -> GroupWord:
    if data["stage"] != calc.stage:
        raise StageMismatch(f"word at stage {data['stage']} given to stage-{calc.stage} calculus")
    pairs = []
    for s in data["syllables"]:
        pairs.append((T, int(s["payload"])) if s["tag"] == T else (int(s["tag"]), element_from_json(s["payload"])))
    return calc.word(*pairs)


# -- the HNN demonstration ----------------------------------------------------

def britton_calculus(n: int = 5) -> WordCalculus:
    """``(Sym(n) *_{Sym(n-1)} Sym(n)')`` with a stable letter centralizing Sym(n-1).

    The base factor (tag 0) stands for the surrounding group, the copy (tag 1)
    for G_n, and Sym(n-1) for G_{n-1}.
    """
    from .permsys import Perm

    def fixes_last(g: Perm) -> bool:
        return g.images[n - 1] == n

    return WordCalculus(
        stage=1, copy_tag=1, mul=lambda g, h: g * h, inv=lambda g: g.inverse(),
        is_id=lambda g: g.is_identity(), edge=fixes_last, assoc=fixes_last,
        to_json=lambda g: g.to_json(), describe=str,
    )


def intersection_scan(calc: WordCalculus, level_elements: Iterable) -> set:
    """Elements g of the copy factor G_n whose conjugate ``t g t^-1`` lies in G_n again."""
    t, t_inv = calc.letter(1), calc.letter(-1)
    found = set()
    for g in level_elements:
        conj = calc.mul(t, calc.word((calc.copy_tag, g)), t_inv)
        if calc.in_factor(conj, calc.copy_tag):
            found.add(g)
    return found


def britton_commutator(calc: WordCalculus, c) -> GroupWord:
    """``c^-1 (t c t^-1) c (t c^-1 t^-1)``, i.e. c^-1 times the conjugate of c by t c t^-1."""
    ci = c.inverse()
    return calc.reduce(calc.word((0, ci), (T, 1), (0, c), (T, -1), (0, c), (T, 1), (0, ci), (T, -1)))


def britton_demo(n: int = 5, max_pow: int = 50) -> dict:
    from .permsys import Perm, symmetric_group

    calc = britton_calculus(n)
    level = symmetric_group(n).enumerate()
    previous = {g for g in level if g.images[n - 1] == n}
    scan = intersection_scan(calc, level)
    c = Perm.from_cycles(n, (n - 1, n))
    w = britton_commutator(calc, c)
    probe = calc.order_probe(w, max_pow)
    return {
        "calc": calc,
        "scan": scan,
        "expected": previous,
        "scan_equals_previous": scan == previous,
        "word": w,
        "probe": probe,
    }

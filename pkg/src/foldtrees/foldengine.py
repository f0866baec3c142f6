"""The stage maps L_i -> L_{i+1} and T_i -> T_{i+1}, and checkers for their properties.

On words the map fixes M-syllables and replaces an M_i-syllable h by
``[M_{i+1}: a_i][M: h][M_{i+1}: a_i^-1]``.  On trees, an edge ``xG_{i-1}`` of
length l is cut at its midpoint: the half at the M-side goes to the edge
``phi(x)G_i`` and the other half, reversed, to ``phi(x)a_iG_i``, the two
meeting at the vertex ``phi(x)M_{i+1}``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .amalgam import GroupWord, WordCalculus
from .bassserre import BassSerreTree, TreeEdge, TreePoint, TreeVertex
from .dyadic import ZERO, Dyadic
from .psystem import FAIL, PASS, CheckReport, PSystem, intersection_law


class Pipeline:
    """Calculi, trees and stage maps of one system, with memoized word images."""

    def __init__(self, sys: PSystem):
        self.sys = sys
        self._trees: dict[int, BassSerreTree] = {}
        self._phi: dict[tuple[int, GroupWord], GroupWord] = {}

    def tree(self, i: int) -> BassSerreTree:
        if i not in self._trees:
            self._trees[i] = BassSerreTree(self.sys, i)
        return self._trees[i]

    def calc(self, i: int) -> WordCalculus:
        return self.tree(i).calc

    def _check_map(self, i: int) -> None:
        if self.sys.depth is not None and i > self.sys.depth:
            raise ValueError(f"no stage map out of stage {i} at depth {self.sys.depth}")

    # -- on words ---------------------------------------------------------
    def phi(self, i: int, w: GroupWord) -> GroupWord:
        if w.stage != i:
            raise ValueError(f"word of stage {w.stage} given to the stage-{i} map")
        self._check_map(i)
        key = (i, w)
        if key in self._phi:
            return self._phi[key]
        ai = self.sys.a(i)
        ai_inv = self.sys.inv(ai)
        pairs = []
        for s in w.syllables:
            if s.tag == 0:
                pairs.append((0, s.payload))
            else:
                pairs.extend(((i + 1, ai), (0, s.payload), (i + 1, ai_inv)))
        dst = self.calc(i + 1)
        out = dst.reduce(dst.word(*pairs))
        self._phi[key] = out
        return out

    def phi_range(self, i: int, j: int, w: GroupWord) -> GroupWord:
        for k in range(i, j):
            w = self.phi(k, w)
        return w

    # -- on trees ---------------------------------------------------------
    def point_image(self, i: int, p: TreePoint) -> TreePoint:
        tree = self.tree(i)
        nxt = self.tree(i + 1)
        if not (ZERO <= p.t <= tree.length):
            raise ValueError("parameter outside the edge")
        x = self.phi(i, p.edge.rep)
        half = tree.length.scale2(-1)
        if p.t <= half:
            return TreePoint(TreeEdge(i + 1, x), p.t)
        flip = nxt.calc.mul(x, nxt.calc.word((i + 1, self.sys.a(i))))
        return TreePoint(TreeEdge(i + 1, flip), tree.length - p.t)

    def point_range(self, i: int, j: int, p: TreePoint) -> TreePoint:
        for k in range(i, j):
            p = self.point_image(k, p)
        return p

    def vertex_image(self, i: int, v: TreeVertex, j: int | None = None) -> TreePoint:
        j = i + 1 if j is None else j
        return self.point_range(i, j, self.tree(i).vertex_point(v))

    def distances(self, i: int, p: TreePoint, q: TreePoint, j_max: int) -> list[Dyadic]:
        """``d_j`` of the images of p and q for j = i..j_max."""
        out = []
        for j in range(i, j_max + 1):
            if j > i:
                p = self.point_image(j - 1, p)
                q = self.point_image(j - 1, q)
            out.append(self.tree(j).distance(p, q))
        return out


# -- helpers for the checkers ------------------------------------------------

def _pool(sys: PSystem, rng: random.Random, predicate, samples: int, sampler) -> list:
    """Exhaustive list when the system is finite, else ``samples`` draws from ``sampler``."""
    elements = sys.elements()
    if elements is not None:
        return [g for g in elements if predicate(g)]
    out = []
    tries = 0
    while len(out) < samples:
        g = sampler(rng)
        tries += 1
        if predicate(g):
            out.append(g)
        if tries > 100 * samples:
            raise RuntimeError("sampler rarely satisfies the predicate")
    return out


@dataclass
class ClauseResult:
    clause: str
    ok: bool
    samples: int
    witness: object = None


def _summarize(name: str, params: dict, clauses: list[ClauseResult], seed: int, finite: bool) -> CheckReport:
    total = sum(c.samples for c in clauses)
    bad = [c for c in clauses if not c.ok]
    detail = {c.clause: {"ok": c.ok, "samples": c.samples} for c in clauses}
    if bad:
        return CheckReport(name, params, FAIL, witness={"clause": bad[0].clause, "witness": bad[0].witness,
                                                        "clauses": detail}, samples=total, seed=seed)
    mode = "exhaustive" if finite else "verified on samples"
    return CheckReport(name, params, PASS, witness={"clauses": detail}, samples=total, seed=seed,
                       note=f"{mode}; {len(clauses)} clauses, {total} checks")


def check_morph_summary(pipe: Pipeline, i: int, samples: int = 100, seed: int = 0) -> CheckReport:
    """Vertex and edge stabilizers after one fold, and both directions of the identification criteria."""
    sys = pipe.sys
    rng = random.Random(seed)
    params = {"system": sys.name, "i": i}
    src, dst = pipe.tree(i), pipe.tree(i + 1)
    sc, dc = src.calc, dst.calc
    ai = sys.a(i)
    ai_inv = sys.inv(ai)
    finite = sys.elements() is not None
    jsonify = sys.to_json

    in_Gi = lambda g: sys.in_level(g, i)
    out_Gi = lambda g: not sys.in_level(g, i)
    new_Gi = lambda g: sys.in_level(g, i) and not sys.in_level(g, i - 1)
    level_i = _pool(sys, rng, in_Gi, samples, lambda r: sys.sample_level(r, i))
    outside_i = _pool(sys, rng, out_Gi, samples, sys.sample)
    new_i = _pool(sys, rng, new_Gi, samples, lambda r: sys.sample_level(r, i))
    anything = _pool(sys, rng, lambda g: True, samples, sys.sample)
    clauses: list[ClauseResult] = []

    def clause(name, items, test):
        for g in items:
            if not test(g):
                clauses.append(ClauseResult(name, False, len(items), jsonify(g)))
                return
        clauses.append(ClauseResult(name, True, len(items)))

    # stabilizers of the three image vertices
    x_img = pipe.vertex_image(i, src.vertex())
    y_img = pipe.vertex_image(i, src.vertex(side=i))
    mid = pipe.point_image(i, TreePoint(src.edge(), src.length.scale2(-1)))
    M_vertex = dst.vertex()
    aM_vertex = dst.vertex(dc.word((i + 1, ai)))
    mid_vertex = dst.vertex(side=i + 1)
    locate_ok = (dst.distance(x_img, dst.vertex_point(M_vertex)) == ZERO
                 and dst.distance(y_img, dst.vertex_point(aM_vertex)) == ZERO
                 and dst.distance(mid, dst.vertex_point(mid_vertex)) == ZERO)
    clauses.append(ClauseResult("vertices: images of x, y and the midpoint", locate_ok, 3))

    def fixes(v: TreeVertex, w: GroupWord) -> bool:
        return dst.vertex_steps(v, dst.act(w, v)) == 0

    conj_a = lambda g: dc.word((i + 1, ai), (0, g), (i + 1, ai_inv))
    clause("vertices: St(phi(x)) contains M", anything, lambda g: fixes(M_vertex, dc.word((0, g))))
    clause("vertices: St(phi(x)) excludes M_{i+1} outside G_i", outside_i,
           lambda g: not fixes(M_vertex, dc.word((i + 1, g))))
    clause("vertices: St(phi(y)) contains M^a", anything, lambda g: fixes(aM_vertex, conj_a(g)))
    clause("vertices: St(phi(y)) excludes M outside G_i", outside_i, lambda g: not fixes(aM_vertex, dc.word((0, g))))
    clause("vertices: St(v) contains M_{i+1}", anything, lambda g: fixes(mid_vertex, dc.word((i + 1, g))))
    clause("vertices: St(v) excludes M outside G_i", outside_i, lambda g: not fixes(mid_vertex, dc.word((0, g))))

    # the two half-edges
    e1 = dst.edge()
    e2 = dst.edge(dc.word((i + 1, ai)))
    quarter = pipe.point_image(i, TreePoint(src.edge(), src.length.scale2(-2)))
    three_q = pipe.point_image(i, TreePoint(src.edge(), src.length.scale2(-2) * 3))
    halves_ok = (dst.same_edge(quarter.edge, e1) and dst.same_edge(three_q.edge, e2)
                 and not dst.same_edge(e1, e2))
    clauses.append(ClauseResult("edges: half-edge images and e1 != e2", halves_ok, 3))
    clause("edges: St(e1) contains G_i", level_i, lambda g: dst.edge_stabilizer_contains(e1, dc.word((0, g))))
    clause("edges: St(e1) excludes M outside G_i", outside_i,
           lambda g: not dst.edge_stabilizer_contains(e1, dc.word((0, g))))
    clause("edges: St(e2) contains G_i^a in M_{i+1}", level_i,
           lambda g: dst.edge_stabilizer_contains(e2, dc.word((i + 1, sys.mul(sys.mul(ai, g), ai_inv)))))
    clause("edges: St(e2) excludes (M outside G_i)^a in M_{i+1}", outside_i,
           lambda g: not dst.edge_stabilizer_contains(e2, dc.word((i + 1, sys.mul(sys.mul(ai, g), ai_inv)))))

    # identification of e1 with c e1 (resp. e2 with c e2)
    q1 = TreePoint(src.edge(), src.length.scale2(-2))
    q2 = TreePoint(src.edge(), src.length.scale2(-2) * 3)

    def identified(tag: int, g, p: TreePoint) -> bool:
        moved = src.act(sc.word((tag, g)), p)
        return dst.same_edge(pipe.point_image(i, p).edge, pipe.point_image(i, moved).edge)

    clause("fold at M: c in G_i \\ G_{i-1} identifies", new_i, lambda g: identified(0, g, q1))
    clause("fold at M: c outside G_i separates", outside_i, lambda g: not identified(0, g, q1))
    clause("fold at copy: c in b(G_i \\ G_{i-1}) identifies", new_i, lambda g: identified(i, g, q2))
    clause("fold at copy: c in M_i outside b(G_i) separates", outside_i, lambda g: not identified(i, g, q2))
    return _summarize("fold-step", params, clauses, seed, finite)


def check_edge_stab(pipe: Pipeline, i: int, j: int, e: TreeEdge | None = None,
                    samples: int = 100, seed: int = 0) -> CheckReport:
    """Stabilizers of an edge transport to stabilizers of its image path, and nothing else does."""
    sys = pipe.sys
    rng = random.Random(seed)
    src = pipe.tree(i)
    e = e or src.edge()
    params = {"system": sys.name, "i": i, "j": j}
    sc = src.calc
    x, x_inv = e.rep, sc.inverse(e.rep)
    finite = sys.elements() is not None
    members = _pool(sys, rng, lambda g: sys.in_level(g, i - 1), samples, lambda r: sys.sample_level(r, i - 1))
    others = _pool(sys, rng, lambda g: not sys.in_level(g, i - 1), samples, sys.sample)
    lo, hi = src.endpoints(e)
    lo_img = pipe.vertex_image(i, lo, j)
    hi_img = pipe.vertex_image(i, hi, j)
    dst = pipe.tree(j)
    clauses: list[ClauseResult] = []

    def fixes_image(g) -> bool:
        s = pipe.phi_range(i, j, sc.mul(x, sc.word((0, g)), x_inv))
        return dst.point_fixed(s, lo_img) and dst.point_fixed(s, hi_img)

    for name, pool, expect in (("members fix the image", members, True),
                               ("non-members move the image", others, False)):
        bad = next((g for g in pool if fixes_image(g) != expect), None)
        clauses.append(ClauseResult(name, bad is None, len(pool), None if bad is None else sys.to_json(bad)))
    law = intersection_law(sys, i, samples, seed)
    clauses.append(ClauseResult("G_i meets G_i^a in G_{i-1}", law.status == PASS, law.samples, law.witness))
    return _summarize("edge_stab", params, clauses, seed, finite)


# -- overlaps of image paths --------------------------------------------------

def overlap_length(tree: BassSerreTree, a: tuple[TreePoint, TreePoint], b: tuple[TreePoint, TreePoint]) -> Dyadic:
    """Length of the intersection of the geodesics [a0, a1] and [b0, b1] in a tree."""
    d = tree.distance
    s1 = d(a[0], a[1]) + d(b[0], b[1])
    s2 = d(a[0], b[0]) + d(a[1], b[1])
    s3 = d(a[0], b[1]) + d(a[1], b[0])
    excess = s1 - min(s2, s3)
    return excess.scale2(-1) if excess > ZERO else ZERO


@dataclass
class FoldHistory:
    overlaps: list[Dyadic]
    growth_stages: list[int]

    @property
    def count(self) -> int:
        return len(self.growth_stages)


def fold_history(pipe: Pipeline, l: int, a: TreeEdge, b: TreeEdge, j_max: int) -> FoldHistory:
    """Overlap of the image paths of two edges of T_l at each stage up to j_max."""
    tree = pipe.tree(l)
    ends_a = [tree.vertex_point(v) for v in tree.endpoints(a)]
    ends_b = [tree.vertex_point(v) for v in tree.endpoints(b)]
    overlaps = []
    growth = []
    for j in range(l, j_max + 1):
        if j > l:
            ends_a = [pipe.point_image(j - 1, p) for p in ends_a]
            ends_b = [pipe.point_image(j - 1, p) for p in ends_b]
        ov = overlap_length(pipe.tree(j), tuple(ends_a), tuple(ends_b))
        if overlaps and ov > overlaps[-1]:
            growth.append(j)
        overlaps.append(ov)
    return FoldHistory(overlaps, growth)

"""Probing the limit of the trees T_i through stage-1 representatives.

The limit tree is never built.  A point of it is a point of T_1; the distance
between two such points is the eventual value of ``d_j`` of their images.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field

from .amalgam import GroupWord
from .bassserre import TreeEdge, TreePoint
from .dyadic import ZERO, Dyadic
from .foldengine import Pipeline, fold_history

STABILIZED, HEURISTIC, EXHAUSTED = "STABILIZED", "HEURISTIC", "EXHAUSTED"


class PreconditionError(ValueError):
    pass


@dataclass
class ProbeResult:
    value: Dyadic | None
    stage: int | None  # first stage from which the value is (claimed) constant
    j_max: int
    status: str
    values: list[Dyadic] = field(default_factory=list)
    window: int | None = None
    proof: str = ""

    def __str__(self):
        if self.status == STABILIZED:
            return f"{self.value} STABILIZED({self.stage})"
        if self.status == HEURISTIC:
            return f"{self.value} HEURISTIC({self.stage}, window={self.window})"
        return f"EXHAUSTED after stage {self.j_max}"

    def row(self, x: str = "", y: str = "") -> dict:
        return {
            "x": x, "y": y,
            "values": [str(v) for v in self.values],
            "status": self.status, "stage": self.stage,
            "value": None if self.value is None else str(self.value),
            "proof": self.proof,
        }


def limit_point(pipe: Pipeline, rep: GroupWord | None = None, t=ZERO) -> TreePoint:
    tree = pipe.tree(1)
    return tree.point(tree.edge(rep), t)


def _top_stage(pipe: Pipeline, j_max: int) -> int:
    top = pipe.sys.max_stage()
    return j_max if top is None else min(j_max, top)


def _fold_budget_stage(pipe: Pipeline, x: TreePoint, y: TreePoint, j_max: int) -> int | None:
    """Stage after which no pair of edges on a path through x and y can fold further.

    Each pair of edges folds at no more than four stages, so once every pair
    has used its four the images stop changing.  Only valid for systems with
    (P4); returns None when some pair still has budget left.
    """
    tree = pipe.tree(1)
    _, _, edges = tree.point_geodesic(x, y)
    edges = [x.edge, *edges, y.edge]
    last = 1
    for k, a in enumerate(edges):
        for b in edges[k + 1:]:
            if tree.same_edge(a, b):
                continue
            hist = fold_history(pipe, 1, a, b, j_max)
            if hist.count < 4:
                return None
            last = max(last, hist.growth_stages[-1])
    return last


def limit_distance(pipe: Pipeline, x: TreePoint, y: TreePoint, j_max: int = 6, window: int = 3) -> ProbeResult:
    if j_max < 2:
        raise ValueError("j_max must be at least 2")
    top = _top_stage(pipe, j_max)
    values = pipe.distances(1, x, y, top)
    tree = pipe.tree(1)
    if tree.same_edge(x.edge, y.edge):
        return ProbeResult(values[0], 1, top, STABILIZED, values,
                           proof="common edge: each stage map embeds an edge isometrically")
    if getattr(pipe.sys, "satisfies_P4", False):
        k = _fold_budget_stage(pipe, x, y, top)
        if k is not None:
            return ProbeResult(values[k - 1], k, top, STABILIZED, values, proof="fold budget spent")
    run = 1
    for idx in range(len(values) - 1, 0, -1):
        if values[idx - 1] != values[-1]:
            break
        run += 1
    if run >= window:
        return ProbeResult(values[-1], len(values) - run + 1, top, HEURISTIC, values, window=window,
                           proof=f"last {run} values equal")
    return ProbeResult(None, None, top, EXHAUSTED, values, window=window)


@dataclass
class LimitEquality:
    status: str  # "EqualByStage" or "UnknownAfter"
    stage: int

    def __str__(self):
        return f"{self.status}({self.stage})"


def limit_equal(pipe: Pipeline, g: GroupWord, h: GroupWord, j_max: int = 6) -> LimitEquality:
    """Semi-decision: equal in the limit group if the images agree at some stage up to j_max.

    The words may come from different stages; comparison starts at the later one.
    """
    top = _top_stage(pipe, j_max)
    for k in range(max(g.stage, h.stage), top + 1):
        gk = pipe.phi_range(g.stage, k, g)
        hk = pipe.phi_range(h.stage, k, h)
        if pipe.calc(k).equal(gk, hk):
            return LimitEquality("EqualByStage", k)
    return LimitEquality("UnknownAfter", top)


@dataclass
class ArcStabilizer:
    m: int
    edge: TreeEdge
    probe: ProbeResult
    pipe: Pipeline

    @property
    def conjugator(self) -> GroupWord:
        return self.edge.rep

    def descriptor(self) -> dict:
        desc = self.pipe.tree(self.m).edge_stabilizer_descriptor(self.edge)
        desc["m"] = self.m
        desc["distance"] = str(self.probe.value)
        return desc

    def contains(self, g: GroupWord) -> bool:
        """Membership of a stage-m word in ``x G_{m-1} x^-1``."""
        return self.pipe.tree(self.m).edge_stabilizer_contains(self.edge, g)

    def sample_member(self, rng: random.Random) -> GroupWord:
        c = self.pipe.calc(self.m)
        core = self.pipe.sys.sample_level(rng, self.m - 1)
        return c.conjugate(c.word((0, core)), self.conjugator)

    def fixes_edge_images(self, g: GroupWord, j_max: int) -> bool:
        """``g`` fixes both endpoints of the image of the witness edge at every stage m..j_max."""
        tree = self.pipe.tree(self.m)
        ends = [tree.vertex_point(v) for v in tree.endpoints(self.edge)]
        for j in range(self.m, _top_stage(self.pipe, j_max) + 1):
            if j > self.m:
                g = self.pipe.phi(j - 1, g)
                ends = [self.pipe.point_image(j - 1, p) for p in ends]
            tj = self.pipe.tree(j)
            if not all(tj.point_fixed(g, p) for p in ends):
                return False
        return True


def arc_stabilizer(pipe: Pipeline, x: TreePoint, y: TreePoint, j_max: int = 6, window: int = 3) -> ArcStabilizer:
    """A stage m and an edge of T_m inside the image of [x, y]; its stabilizer contains the arc stabilizer."""
    probe = limit_distance(pipe, x, y, j_max, window)
    if probe.status == EXHAUSTED:
        raise PreconditionError(f"no stable distance within stage {probe.j_max}")
    d = probe.value
    if d == ZERO:
        raise PreconditionError("degenerate arc: the points coincide in the limit")
    m = probe.stage
    while Dyadic.pow2(2 - m) >= d:
        m += 1
    if m > probe.j_max:
        raise PreconditionError(f"need stage {m} for an edge inside the arc, beyond {probe.j_max}")
    p = pipe.point_range(1, m, x)
    q = pipe.point_range(1, m, y)
    _, _, edges = pipe.tree(m).point_geodesic(p, q)
    if not edges:
        raise RuntimeError("geodesic longer than two edges contains no full edge")
    return ArcStabilizer(m, edges[0], probe, pipe)


def probes_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    width = max((len(r["values"]) for r in rows), default=0)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "y", *[f"d{j}" for j in range(1, width + 1)], "status", "stage", "value"])
    for r in rows:
        vals = r["values"] + [""] * (width - len(r["values"]))
        writer.writerow([r["x"], r["y"], *vals, r["status"], r["stage"], r["value"]])
    return buf.getvalue()

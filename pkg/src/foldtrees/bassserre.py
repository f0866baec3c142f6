"""The Bass-Serre trees T_i of the amalgams L_i, with exact dyadic metrics.

Vertices are cosets ``xM`` and ``xM_i``, edges are cosets ``xG_{i-1}`` joining
``xM`` to ``xM_i``.  Every edge has length ``1/2^(i-1)`` and a point on it is
recorded by its distance from the M-side endpoint.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterator

from .amalgam import GroupWord, Syllable, WordCalculus, amalgam
from .dyadic import ZERO, Dyadic
from .psystem import PSystem


def edge_length(stage: int) -> Dyadic:
    return Dyadic(1, stage - 1)


@dataclass(frozen=True)
class TreeVertex:
    stage: int
    side: int  # 0 for an M-coset, the stage index for an M_i-coset
    rep: GroupWord


@dataclass(frozen=True)
class TreeEdge:
    stage: int
    rep: GroupWord


@dataclass(frozen=True)
class TreePoint:
    edge: TreeEdge
    t: Dyadic


class BassSerreTree:
    """Distances, geodesics and stabilizers in T_stage for a given system."""

    def __init__(self, sys: PSystem, stage: int):
        self.sys = sys
        self.stage = stage
        self.calc: WordCalculus = amalgam(sys, stage)
        self.length = edge_length(stage)
        self.copy = stage

    # -- constructors -----------------------------------------------------
    def vertex(self, rep: GroupWord | None = None, side: int = 0) -> TreeVertex:
        rep = self.calc.identity() if rep is None else self.calc.reduce(rep)
        if side not in (0, self.copy):
            raise ValueError(f"side must be 0 or {self.copy}")
        return TreeVertex(self.stage, side, rep)

    def edge(self, rep: GroupWord | None = None) -> TreeEdge:
        rep = self.calc.identity() if rep is None else self.calc.reduce(rep)
        return TreeEdge(self.stage, rep)

    def point(self, edge: TreeEdge, t) -> TreePoint:
        t = Dyadic.of(t)
        if not (ZERO <= t <= self.length):
            raise ValueError(f"parameter {t} outside [0, {self.length}]")
        self._check(edge)
        return TreePoint(edge, t)

    def vertex_point(self, v: TreeVertex) -> TreePoint:
        return TreePoint(TreeEdge(self.stage, v.rep), ZERO if v.side == 0 else self.length)

    def endpoints(self, e: TreeEdge) -> tuple[TreeVertex, TreeVertex]:
        return TreeVertex(self.stage, 0, e.rep), TreeVertex(self.stage, self.copy, e.rep)

    def _check(self, *objs) -> None:
        for o in objs:
            st = o.edge.stage if isinstance(o, TreePoint) else o.stage
            if st != self.stage:
                raise ValueError(f"object of stage {st} used in T_{self.stage}")

    # -- the action -------------------------------------------------------
    def act(self, g: GroupWord, obj):
        c = self.calc
        if isinstance(obj, TreePoint):
            return TreePoint(TreeEdge(self.stage, c.mul(g, obj.edge.rep)), obj.t)
        if isinstance(obj, TreeEdge):
            return TreeEdge(self.stage, c.mul(g, obj.rep))
        return TreeVertex(self.stage, obj.side, c.mul(g, obj.rep))

    # -- vertices ---------------------------------------------------------
    def _path_data(self, u: TreeVertex, v: TreeVertex) -> tuple[GroupWord, list[Syllable]]:
        """Prefix and remaining alternating syllables of ``u.rep^-1 v.rep`` after absorbing the ends."""
        c = self.calc
        z = c.mul(c.inverse(u.rep), v.rep)
        syl = list(z.syllables)
        prefix = u.rep
        if syl and (syl[0].tag == u.side or c.edge(syl[0].payload)):
            prefix = c.mul(prefix, GroupWord(self.stage, (syl[0],)))
            syl = syl[1:]
        if syl and (syl[-1].tag == v.side or c.edge(syl[-1].payload)):
            syl = syl[:-1]
        return prefix, syl

    def _steps(self, z: GroupWord, x_side: int, y_side: int) -> int:
        """Edges between ``X`` and ``z Y`` where z is reduced."""
        syl = z.syllables
        lo, hi = 0, len(syl)
        edge = self.calc.edge
        if hi > lo and (syl[lo].tag == x_side or edge(syl[lo].payload)):
            lo += 1
        if hi > lo and (syl[hi - 1].tag == y_side or edge(syl[hi - 1].payload)):
            hi -= 1
        if hi == lo and x_side == y_side:
            return 0
        return hi - lo + 1

    def quotient(self, u: GroupWord, v: GroupWord) -> GroupWord:
        c = self.calc
        return c.mul(c.inverse(u), v)

    def vertex_steps(self, u: TreeVertex, v: TreeVertex) -> int:
        """Combinatorial distance (number of edges)."""
        self._check(u, v)
        return self._steps(self.quotient(u.rep, v.rep), u.side, v.side)

    def vertex_distance(self, u: TreeVertex, v: TreeVertex) -> Dyadic:
        return self.length * self.vertex_steps(u, v)

    def same_vertex(self, u: TreeVertex, v: TreeVertex) -> bool:
        return u.side == v.side and self.vertex_steps(u, v) == 0

    def same_edge(self, e: TreeEdge, f: TreeEdge) -> bool:
        c = self.calc
        return c.in_edge_group(c.mul(c.inverse(e.rep), f.rep))

    def geodesic_vertices(self, u: TreeVertex, v: TreeVertex) -> list[TreeVertex]:
        """Vertices on the geodesic from u to v, read off prefix cosets of the reduced quotient."""
        self._check(u, v)
        prefix, syl = self._path_data(u, v)
        c = self.calc
        path = [TreeVertex(self.stage, u.side, prefix)]
        if not syl and u.side == v.side:
            return path
        other = {0: self.copy, self.copy: 0}
        side = other[u.side]
        cur = prefix
        path.append(TreeVertex(self.stage, side, cur))
        for s in syl:
            cur = c.mul(cur, GroupWord(self.stage, (s,)))
            side = other[side]
            path.append(TreeVertex(self.stage, side, cur))
        return path

    def geodesic_edges(self, u: TreeVertex, v: TreeVertex) -> list[TreeEdge]:
        path = self.geodesic_vertices(u, v)
        # the edge into each later vertex is the coset of that vertex's representative
        return [TreeEdge(self.stage, b.rep) for b in path[1:]]

    # -- points -----------------------------------------------------------
    def _to_ends(self, p: TreePoint) -> list[tuple[TreeVertex, Dyadic]]:
        lo, hi = self.endpoints(p.edge)
        return [(lo, p.t), (hi, self.length - p.t)]

    def distance(self, p: TreePoint, q: TreePoint) -> Dyadic:
        """Exact distance in T_stage."""
        self._check(p, q)
        z = self.quotient(p.edge.rep, q.edge.rep)
        if len(z) == 0 or (len(z) == 1 and self.calc.edge(z.syllables[0].payload)):
            return abs(p.t - q.t)
        ends_p = ((0, p.t), (self.copy, self.length - p.t))
        ends_q = ((0, q.t), (self.copy, self.length - q.t))
        return min(du + self.length * self._steps(z, x, y) + dv for x, du in ends_p for y, dv in ends_q)

    def point_geodesic(self, p: TreePoint, q: TreePoint) -> tuple[TreeVertex | None, TreeVertex | None, list[TreeEdge]]:
        """The full edges inside the geodesic [p, q], in order from p."""
        self._check(p, q)
        if self.same_edge(p.edge, q.edge):
            if {p.t, q.t} == {ZERO, self.length}:
                return None, None, [p.edge]
            return None, None, []
        best = None
        for u, du in self._to_ends(p):
            for v, dv in self._to_ends(q):
                d = du + self.vertex_distance(u, v) + dv
                # prefer routes that start and end closest to the points (ties happen at vertices)
                key = (d, du, dv)
                if best is None or key < best[0]:
                    best = (key, u, v, du, dv)
        _, u, v, du, dv = best
        edges = []
        if du == self.length:
            edges.append(p.edge)
        edges.extend(self.geodesic_edges(u, v))
        if dv == self.length:
            edges.append(q.edge)
        return u, v, edges

    def point_fixed(self, g: GroupWord, p: TreePoint) -> bool:
        return self.distance(p, self.act(g, p)) == ZERO

    # -- stabilizers ------------------------------------------------------
    def edge_stabilizer_contains(self, e: TreeEdge, g: GroupWord) -> bool:
        c = self.calc
        return c.in_edge_group(c.mul(c.inverse(e.rep), g, e.rep))

    def vertex_stabilizer_contains(self, v: TreeVertex, g: GroupWord) -> bool:
        c = self.calc
        return c.in_factor(c.mul(c.inverse(v.rep), g, v.rep), v.side)

    def edge_stabilizer_descriptor(self, e: TreeEdge) -> dict:
        return {"stage": self.stage, "conjugator": self.calc.to_json(e.rep),
                "conjugator_str": self.calc.describe(e.rep), "subgroup": f"G_{self.stage - 1}"}

    def geodesic_json(self, u: TreeVertex, v: TreeVertex) -> dict:
        return {
            "stage": self.stage,
            "distance": str(self.vertex_distance(u, v)),
            "vertices": [{"side": "M" if w.side == 0 else f"M{self.copy}", "rep": self.calc.to_json(w.rep)}
                         for w in self.geodesic_vertices(u, v)],
        }


# -- an independent oracle for finite systems ------------------------------

class TransversalOracle:
    """Normal forms ``t_1 ... t_k c`` from coset tables, and BFS balls of T_stage.

    Built only from the enumerated groups: it never calls the reduction engine.
    """

    def __init__(self, sys: PSystem, stage: int):
        elements = sys.elements()
        if elements is None:
            raise ValueError(f"system {sys.name} is not finite; balls need finite transversals")
        sys.check_stage(stage)
        self.sys = sys
        self.stage = stage
        self.one = sys.identity()
        edge_group = [g for g in elements if sys.in_level(g, stage - 1)]
        self.table: dict = {}
        self.transversal: list = [self.one]
        for c in edge_group:
            self.table[c] = (self.one, c)
        for g in elements:
            if g in self.table:
                continue
            self.transversal.append(g)
            for c in edge_group:
                self.table[g * c] = (g, c)
        self.index = len(self.transversal)

    def normal_form(self, syllables) -> tuple[tuple, object]:
        """``(((tag, rep), ...), c)`` for a sequence of ``(tag, element)`` pairs."""
        seq: list = []
        c = self.one
        for tag, g in syllables:
            if seq and seq[-1][0] == tag:
                r, c = self.table[seq[-1][1] * c * g]
                if r == self.one:
                    seq.pop()
                else:
                    seq[-1] = (tag, r)
            else:
                r, c = self.table[c * g]
                if r != self.one:
                    seq.append((tag, r))
        return tuple(seq), c

    def word_normal_form(self, w: GroupWord):
        return self.normal_form((s.tag, s.payload) for s in w.syllables)

    def is_identity(self, w: GroupWord) -> bool:
        seq, c = self.word_normal_form(w)
        return not seq and c == self.one

    def equal(self, u: GroupWord, w: GroupWord) -> bool:
        return self.word_normal_form(u) == self.word_normal_form(w)

    def vertex_key(self, w: GroupWord, side: int) -> tuple:
        seq, _ = self.word_normal_form(w)
        return _vertex_key(seq, side)

    def edge_key(self, w: GroupWord) -> tuple:
        return self.word_normal_form(w)[0]

    def neighbours(self, key: tuple) -> Iterator[tuple[tuple, tuple]]:
        side, seq = key
        other = self.stage if side == 0 else 0
        for t in self.transversal:
            edge = seq if t == self.one else seq + ((side, t),)
            yield edge, _vertex_key(edge, other)

    def ball(self, radius: int, center: tuple | None = None, guard: int = 200_000) -> "Ball":
        """Breadth-first ball of the given combinatorial radius around ``center`` (default the vertex M)."""
        center = center or (0, ())
        depth = {center: 0}
        edges: dict[tuple, tuple] = {}
        queue = deque([center])
        while queue:
            key = queue.popleft()
            if depth[key] == radius:
                continue
            for edge, nxt in self.neighbours(key):
                if nxt not in depth:
                    depth[nxt] = depth[key] + 1
                    if len(depth) > guard:
                        raise ValueError(f"ball exceeded {guard} vertices")
                    edges[edge] = (key, nxt)
                    queue.append(nxt)
        return Ball(self, center, radius, depth, edges)

    def distance_steps(self, u: GroupWord, u_side: int, v: GroupWord, v_side: int, radius: int) -> int | None:
        """BFS distance between ``uX`` and ``vY`` if within the radius, else None."""
        quotient = [(s.tag, self.sys.inv(s.payload)) for s in reversed(u.syllables)]
        quotient += [(s.tag, s.payload) for s in v.syllables]
        seq, _ = self.normal_form(quotient)
        target = _vertex_key(seq, v_side)
        ball = self._cached_ball(u_side, radius)
        return ball.depth.get(target)

    def _cached_ball(self, side: int, radius: int) -> "Ball":
        cache = self.__dict__.setdefault("_balls", {})
        if (side, radius) not in cache:
            cache[(side, radius)] = self.ball(radius, (side, ()))
        return cache[(side, radius)]


def _vertex_key(seq: tuple, side: int) -> tuple:
    if seq and seq[-1][0] == side:
        seq = seq[:-1]
    return side, seq


@dataclass
class Ball:
    oracle: TransversalOracle
    center: tuple
    radius: int
    depth: dict
    edges: dict

    @property
    def vertex_count(self) -> int:
        return len(self.depth)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def _label(self, key: tuple) -> str:
        side, seq = key
        name = "M" if side == 0 else f"M{self.oracle.stage}"
        body = "".join(f"[{'M' if tag == 0 else 'M' + str(tag)}:{self.oracle.sys.describe(r)}]" for tag, r in seq)
        return f"{body or '1'}{name}"

    def to_dot(self) -> str:
        ids = {key: f"v{n}" for n, key in enumerate(sorted(self.depth, key=lambda k: (self.depth[k], repr(k))))}
        lines = [f"graph ball_stage{self.oracle.stage}_r{self.radius} {{"]
        for key, name in ids.items():
            lines.append(f'  {name} [label="{self._label(key)}"];')
        for edge, (u, v) in sorted(self.edges.items(), key=lambda kv: (self.depth[kv[1][1]], repr(kv[0]))):
            body = "".join(f"[{'M' if tag == 0 else 'M' + str(tag)}:{self.oracle.sys.describe(r)}]" for tag, r in edge)
            lines.append(f'  {ids[u]} -- {ids[v]} [label="{body or "1"}G{self.oracle.stage - 1}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "stage": self.oracle.stage,
            "radius": self.radius,
            "vertices": [{"label": self._label(k), "depth": d} for k, d in
                         sorted(self.depth.items(), key=lambda kv: (kv[1], repr(kv[0])))],
            "edges": len(self.edges),
        }

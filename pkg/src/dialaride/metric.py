"""Metric spaces, server positions and unit-speed motion.

Two kinds of space are supported: the real line, and a finite metric given by
a distance matrix over vertices ``0..n-1`` (vertex 0 is the origin).  In a
finite metric the server may be stopped partway along a traversal, which is
represented by :class:`EdgeInterior` and handled with the usual metric-graph
completion of the matrix.

All quantities are :class:`fractions.Fraction`; nothing is ever rounded.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

Rational = Fraction


class MetricError(ValueError):
    """Invalid metric data, or a point that does not belong to the space."""


def to_rational(value) -> Fraction:
    """Parse an int, Fraction or ``"p/q"`` / decimal string exactly.

    Floats are refused: they would silently import rounding error.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def format_rational(q: Fraction) -> str:
    return str(Fraction(q))


@dataclass(frozen=True, order=True)
class LineCoord:
    x: Fraction

    def __post_init__(self):
        object.__setattr__(self, "x", to_rational(self.x))

    def __repr__(self):
        return f"LineCoord({self.x})"


@dataclass(frozen=True, order=True)
class Vertex:
    id: int

    def __repr__(self):
        return f"Vertex({self.id})"


@dataclass(frozen=True, order=True)
class EdgeInterior:
    """A point strictly inside the edge ``{u, v}``, ``offset`` away from ``u``.

    Build these through :meth:`FiniteMetric.edge_point`, which orients the
    edge so that ``u < v`` and collapses the endpoints to vertices.
    """

    u: int
    v: int
    offset: Fraction

    def __repr__(self):
        return f"EdgeInterior({self.u},{self.v},{self.offset})"


Point = Union[LineCoord, Vertex, EdgeInterior]


class RealLine:
    """The real line with ``d(a, b) = |a - b|`` and origin 0."""

    kind = "line"

    @property
    def origin(self) -> LineCoord:
        return LineCoord(Fraction(0))

    def __eq__(self, other):
        return isinstance(other, RealLine)

    def __hash__(self):
        return hash("RealLine")

    def __repr__(self):
        return "RealLine()"

    def check_point(self, p: Point) -> None:
        if not isinstance(p, LineCoord):
            raise MetricError(f"{p!r} is not a point of the real line")

    def is_request_point(self, p: Point) -> bool:
        return isinstance(p, LineCoord)

    def distance(self, p: Point, q: Point) -> Fraction:
        self.check_point(p)
        self.check_point(q)
        return abs(p.x - q.x)

    def advance(self, start: Point, toward: Point, elapsed) -> Point:
        elapsed = to_rational(elapsed)
        total = self.distance(start, toward)
        _check_elapsed(elapsed, total)
        if toward.x >= start.x:
            return LineCoord(start.x + elapsed)
        return LineCoord(start.x - elapsed)

    def direction_token(self, p: Point, q: Point) -> int:
        """Sort key for the move p -> q: negative direction sorts first."""
        return -1 if q.x < p.x else 1

    def to_json(self) -> dict:
        return {"space": "line"}


class FiniteMetric:
    """A finite metric space given by a symmetric distance matrix.

    The matrix is validated on construction: zero diagonal, symmetric,
    strictly positive off-diagonal entries, triangle inequality.
    """

    kind = "finite"

    def __init__(self, dist: Sequence[Sequence]):
        matrix = tuple(tuple(to_rational(x) for x in row) for row in dist)
        n = len(matrix)
        if n == 0:
            raise MetricError("a finite metric needs at least one vertex")
        for i, row in enumerate(matrix):
            if len(row) != n:
                raise MetricError(f"row {i} has length {len(row)}, expected {n}")
        for i in range(n):
            if matrix[i][i] != 0:
                raise MetricError(f"d({i},{i}) = {matrix[i][i]} is not zero")
            for j in range(i + 1, n):
                if matrix[i][j] != matrix[j][i]:
                    raise MetricError(f"d({i},{j}) != d({j},{i})")
                if matrix[i][j] <= 0:
                    raise MetricError(f"d({i},{j}) = {matrix[i][j]} is not positive")
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if matrix[i][k] > matrix[i][j] + matrix[j][k]:
                        raise MetricError(
                            f"triangle inequality fails: d({i},{k}) > d({i},{j}) + d({j},{k})"
                        )
        self.n = n
        self.dist = matrix

    @property
    def origin(self) -> Vertex:
        return Vertex(0)

    def __eq__(self, other):
        return isinstance(other, FiniteMetric) and self.dist == other.dist

    def __hash__(self):
        return hash(self.dist)

    def __repr__(self):
        return f"FiniteMetric(n={self.n})"

    def edge_point(self, u: int, v: int, offset) -> Point:
        """The point ``offset`` along the edge from ``u`` toward ``v``."""
        offset = to_rational(offset)
        length = self.dist[u][v]
        if offset < 0 or offset > length:
            raise MetricError(f"offset {offset} outside [0, {length}] on edge ({u},{v})")
        if offset == 0:
            return Vertex(u)
        if offset == length:
            return Vertex(v)
        if u > v:
            return EdgeInterior(v, u, length - offset)
        return EdgeInterior(u, v, offset)

    def check_point(self, p: Point) -> None:
        if isinstance(p, Vertex):
            if not 0 <= p.id < self.n:
                raise MetricError(f"vertex {p.id} out of range")
            return
        if isinstance(p, EdgeInterior):
            if not (0 <= p.u < p.v < self.n):
                raise MetricError(f"bad edge ({p.u},{p.v})")
            if not 0 < p.offset < self.dist[p.u][p.v]:
                raise MetricError(f"offset {p.offset} not strictly inside edge ({p.u},{p.v})")
            return
        raise MetricError(f"{p!r} is not a point of a finite metric")

    def is_request_point(self, p: Point) -> bool:
        return isinstance(p, Vertex) and 0 <= p.id < self.n

    def _anchors(self, p: Point):
        """(vertex, distance from p) pairs through which p reaches the rest."""
        if isinstance(p, Vertex):
            return ((p.id, Fraction(0)),)
        return ((p.u, p.offset), (p.v, self.dist[p.u][p.v] - p.offset))

    def distance(self, p: Point, q: Point) -> Fraction:
        self.check_point(p)
        self.check_point(q)
        if p == q:
            return Fraction(0)
        best = min(
            sp + self.dist[a][b] + sq
            for a, sp in self._anchors(p)
            for b, sq in self._anchors(q)
        )
        if (
            isinstance(p, EdgeInterior)
            and isinstance(q, EdgeInterior)
            and (p.u, p.v) == (q.u, q.v)
        ):
            best = min(best, abs(p.offset - q.offset))
        return best

    def advance(self, start: Point, toward: Point, elapsed) -> Point:
        elapsed = to_rational(elapsed)
        if not isinstance(toward, Vertex):
            raise MetricError("motion in a finite metric must head for a vertex")
        total = self.distance(start, toward)
        _check_elapsed(elapsed, total)
        if elapsed == total:
            return toward
        if elapsed == 0:
            return start
        w = toward.id
        if isinstance(start, Vertex):
            return self.edge_point(start.id, w, elapsed)
        u, v, s = start.u, start.v, start.offset
        if w == u:
            return self.edge_point(u, v, s - elapsed)
        if w == v:
            return self.edge_point(u, v, s + elapsed)
        via_u = s + self.dist[u][w]
        via_v = self.dist[u][v] - s + self.dist[v][w]
        # Ties go through the lower-indexed endpoint; u < v by construction.
        if via_u <= via_v:
            if elapsed <= s:
                return self.edge_point(u, v, s - elapsed)
            return self.edge_point(u, w, elapsed - s)
        to_v = self.dist[u][v] - s
        if elapsed <= to_v:
            return self.edge_point(u, v, s + elapsed)
        return self.edge_point(v, w, elapsed - to_v)

    def direction_token(self, p: Point, q: Point) -> int:
        """Sort key for the move p -> q: lower target vertex sorts first."""
        return q.id if isinstance(q, Vertex) else self.n

    def to_json(self) -> dict:
        return {"space": "finite", "dist": [[format_rational(x) for x in row] for row in self.dist]}


MetricSpace = Union[RealLine, FiniteMetric]


def _check_elapsed(elapsed: Fraction, total: Fraction) -> None:
    if elapsed < 0:
        raise MetricError(f"elapsed time {elapsed} is negative")
    if elapsed > total:
        raise MetricError(f"elapsed time {elapsed} exceeds the distance {total}")


def distance(space: MetricSpace, p: Point, q: Point) -> Fraction:
    return space.distance(p, q)


def advance(space: MetricSpace, start: Point, toward: Point, elapsed) -> Point:
    return space.advance(start, toward, elapsed)


def space_from_json(obj: dict) -> MetricSpace:
    kind = obj.get("space")
    if kind == "line":
        return RealLine()
    if kind == "finite":
        return FiniteMetric(obj["dist"])
    raise MetricError(f"unknown space kind {kind!r}")


def point_to_json(p: Point):
    if isinstance(p, LineCoord):
        return format_rational(p.x)
    if isinstance(p, Vertex):
        return p.id
    return {"u": p.u, "v": p.v, "offset": format_rational(p.offset)}


def point_from_json(space: MetricSpace, value) -> Point:
    if isinstance(space, RealLine):
        p = LineCoord(to_rational(value))
    elif isinstance(value, dict):
        p = space.edge_point(int(value["u"]), int(value["v"]), to_rational(value["offset"]))
    else:
        if isinstance(value, bool) or not isinstance(value, int):
            raise MetricError(f"vertex id must be an integer, got {value!r}")
        p = Vertex(value)
    space.check_point(p)
    return p


def shortest_path_closure(weights: Sequence[Sequence]) -> list[list[Fraction]]:
    """Floyd-Warshall repair of a symmetric positive weight matrix."""
    n = len(weights)
    d = [[to_rational(weights[i][j]) if i != j else Fraction(0) for j in range(n)] for i in range(n)]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return d

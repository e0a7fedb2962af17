"""Semigroup dominance range searching with a layered range tree.

``query(q)`` returns the sum, over stored points p with q_i <= p_i in every
coordinate (or q_i < p_i where strict), of the point weights.  Only the
monoid's addition is used; suffix aggregates stand in for prefix differences.
"""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from math import isfinite
from typing import Sequence

from .errors import StructuralError
from .relation import Counters
from .semiring import COUNT, Semiring

LE, LT = "<=", "<"


class _Base:
    """Last coordinate: sorted values with suffix aggregates."""

    __slots__ = ("vals", "suffix")

    def __init__(self, vals, weights, sr):
        self.vals = vals
        suffix = [sr.zero] * (len(vals) + 1)
        add = sr.add
        acc = sr.zero
        for i in range(len(vals) - 1, -1, -1):
            acc = add(weights[i], acc)
            suffix[i] = acc
        self.suffix = suffix


class _Layer:
    """One coordinate of the tree: a segment tree over points sorted on that coordinate.

    Node ``v`` covers the sorted slice ``[lo, hi)`` and owns a structure on the
    remaining coordinates for exactly those points.
    """

    __slots__ = ("vals", "sub", "los", "his", "n")

    def __init__(self, pts, weights, dim, k, sr):
        order = sorted(range(len(pts)), key=lambda i: pts[i][dim])
        pts = [pts[i] for i in order]
        weights = [weights[i] for i in order]
        self.vals = [p[dim] for p in pts]
        self.n = len(pts)
        self.sub, self.los, self.his = {}, {}, {}
        stack = [(1, 0, self.n)] if self.n else []
        while stack:
            node, lo, hi = stack.pop()
            self.los[node], self.his[node] = lo, hi
            self.sub[node] = _make(pts[lo:hi], weights[lo:hi], dim + 1, k, sr)
            if hi - lo > 1:
                mid = (lo + hi) // 2
                stack.append((2 * node, lo, mid))
                stack.append((2 * node + 1, mid, hi))

    def canonical(self, start):
        """Nodes whose disjoint slices union to [start, n)."""
        out = []
        node, lo, hi = 1, 0, self.n
        while start < hi:
            if start <= lo:
                out.append(node)
                break
            mid = (lo + hi) // 2
            if start < mid:
                out.append(2 * node + 1)
                node, hi = 2 * node, mid
            else:
                node, lo = 2 * node + 1, mid
        return out


def _make(pts, weights, dim, k, sr):
    if dim == k - 1:
        order = sorted(range(len(pts)), key=lambda i: pts[i][dim])
        return _Base([pts[i][dim] for i in order], [weights[i] for i in order], sr)
    return _Layer(pts, weights, dim, k, sr)


def _entries(s) -> int:
    if isinstance(s, _Base):
        return len(s.vals)
    return sum(_entries(t) for t in s.sub.values())


class DominanceIndex:
    def __init__(self, points: Sequence, k: int, strictness: Sequence[str], semiring: Semiring,
                 counters: Counters | None = None):
        if k < 1:
            raise StructuralError("dominance index needs k >= 1")
        strictness = tuple(strictness)
        if len(strictness) != k or any(s not in (LE, LT) for s in strictness):
            raise StructuralError(f"strictness must be {k} entries of '<=' or '<'")
        coords, weights = [], []
        for c, w in points:
            c = tuple(float(x) for x in c)
            if len(c) != k:
                raise StructuralError(f"point {c} has dimension {len(c)}, index has {k}")
            if not all(isfinite(x) for x in c):
                raise StructuralError(f"point {c} has a non-finite coordinate")
            coords.append(c)
            weights.append(w)
        self.k = k
        self.strictness = strictness
        self.semiring = semiring
        self.size = len(coords)
        self.counters = counters if counters is not None else Counters()
        self.root = _make(coords, weights, 0, k, semiring)
        self.counters.index_entries += _entries(self.root)

    def _start(self, vals, x, dim):
        if self.strictness[dim] == LT:
            return bisect_right(vals, x)
        return bisect_left(vals, x)

    def query(self, q: Sequence[float]):
        if len(q) != self.k:
            raise StructuralError(f"query {q} has dimension {len(q)}, index has {self.k}")
        self.counters.dominance_queries += 1
        q = [float(x) for x in q]
        sr = self.semiring
        acc = sr.zero
        stack = [(self.root, 0)]
        while stack:
            s, dim = stack.pop()
            if isinstance(s, _Base):
                acc = sr.add(acc, s.suffix[self._start(s.vals, q[dim], dim)])
                continue
            start = self._start(s.vals, q[dim], dim)
            for node in s.canonical(start):
                stack.append((s.sub[node], dim + 1))
        return acc

    def total(self):
        """Sum of every stored weight."""
        s = self.root
        while not isinstance(s, _Base):
            if not s.n:
                return self.semiring.zero
            s = s.sub[1]
        return s.suffix[0]


def build(points: Sequence, k: int, strictness: Sequence[str] | None = None,
          semiring: Semiring | None = None, counters: Counters | None = None) -> DominanceIndex:
    return DominanceIndex(points, k, strictness or (LE,) * k, semiring or COUNT, counters)


def query(idx: DominanceIndex, q: Sequence[float]):
    return idx.query(q)


def scan(points: Sequence, q: Sequence[float], strictness: Sequence[str], semiring: Semiring):
    """Linear-scan reference for ``query``."""
    acc = semiring.zero
    for c, w in points:
        if all((qi < pi) if s == LT else (qi <= pi) for qi, pi, s in zip(q, c, strictness)):
            acc = semiring.add(acc, w)
    return acc

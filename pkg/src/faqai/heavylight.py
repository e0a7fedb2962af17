"""Degree-partitioned plans for the 4-cycle count and the 4-path count with a
four-variable inequality.

A group of rows sharing the split variables is light when it has at most
``threshold`` rows.  The plans use ``threshold = isqrt(N)``, i.e. degree <= sqrt(N)
for integer degrees, which keeps every materialized intermediate within N**1.5.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import isqrt

from .engine import filter_rows
from .engine import two_bag_eliminate
from .errors import StructuralError
from .query import Ligament
from .relation import (AnnotatedRelation, Counters, Database, group_aggregate,
                       multiway_join)


@dataclass
class DegreeSplit:
    source: AnnotatedRelation
    x_vars: tuple
    threshold: int
    light: AnnotatedRelation
    heavy: AnnotatedRelation

    def light_keys(self) -> set:
        pos = [self.source.schema.index(v) for v in self.x_vars]
        return {tuple(t[i] for i in pos) for t in self.light.rows}


def degree_split(r: AnnotatedRelation, x_vars, threshold: int) -> DegreeSplit:
    x_vars = tuple(x_vars)
    if not set(x_vars) <= set(r.schema):
        raise StructuralError(f"split variables {x_vars} not in {r.schema}")
    pos = [r.schema.index(v) for v in x_vars]
    deg = {}
    for t in r.rows:
        k = tuple(t[i] for i in pos)
        deg[k] = deg.get(k, 0) + 1
    light, heavy = {}, {}
    for t, a in r.rows.items():
        (light if deg[tuple(t[i] for i in pos)] <= threshold else heavy)[t] = a
    return DegreeSplit(r, x_vars, threshold,
                       AnnotatedRelation(r.schema, light, r.semiring),
                       AnnotatedRelation(r.schema, heavy, r.semiring))


def sqrt_threshold(*rels) -> int:
    return isqrt(max((len(r) for r in rels), default=0))


def _binary(r: AnnotatedRelation, schema) -> AnnotatedRelation:
    if len(r.schema) != 2:
        raise StructuralError(f"expected a binary relation, got schema {r.schema}")
    return r.rename(schema)


def _select(r: AnnotatedRelation, pred) -> AnnotatedRelation:
    idx = {v: i for i, v in enumerate(r.schema)}
    return AnnotatedRelation(r.schema, {t: a for t, a in r.rows.items()
                                        if pred({v: t[i] for v, i in idx.items()})}, r.semiring)


def _two_bag_total(first: AnnotatedRelation, second: AnnotatedRelation, counters: Counters):
    folded = two_bag_eliminate(first, second, (), None, counters)
    return group_aggregate(folded, ()).scalar()


@dataclass
class CycleSplits:
    threshold: int
    light1: set  # x1 values light in R12 (degree on x1)
    light2: set
    light3: set
    light4: set

    def flags(self, x1, x2, x3, x4) -> tuple:
        return ((x1,) in self.light1, (x2,) in self.light2, (x3,) in self.light3, (x4,) in self.light4)

    def branches(self, x1, x2, x3, x4) -> tuple:
        """Membership of a joint tuple in the three disjoint branches."""
        l1, l2, l3, l4 = self.flags(x1, x2, x3, x4)
        a = (l2 or not l1) and (l4 or not l3)
        b1 = (not l2) and l1
        b2 = l3 and (not l4) and (l2 or not l1)
        return a, b1, b2


def cycle_splits(r12, r23, r34, r41, threshold: int | None = None) -> CycleSplits:
    rels = [_binary(r12, ("x1", "x2")), _binary(r23, ("x2", "x3")),
            _binary(r34, ("x3", "x4")), _binary(r41, ("x4", "x1"))]
    thr = sqrt_threshold(*rels) if threshold is None else threshold
    lights = [degree_split(r, (r.schema[0],), thr).light_keys() for r in rels]
    return CycleSplits(thr, *lights)


def count_4cycle(db: Database, names=("R12", "R23", "R34", "R41"), counters: Counters | None = None,
                 threshold: int | None = None):
    """Sum over x1..x4 of R12(x1,x2) R23(x2,x3) R34(x3,x4) R41(x4,x1).

    The join is split into three disjoint parts by the light/heavy status of
    each relation's first variable.  Part A uses bags {1,2,3},{3,4,1}; parts B1
    and B2 use bags {2,3,4},{4,1,2}.  Every bag relation is a join of one light
    relation with a full one, or one heavy relation with a full one, so it has at
    most N**1.5 rows.
    """
    counters = counters if counters is not None else Counters()
    r12 = _binary(db[names[0]], ("x1", "x2"))
    r23 = _binary(db[names[1]], ("x2", "x3"))
    r34 = _binary(db[names[2]], ("x3", "x4"))
    r41 = _binary(db[names[3]], ("x4", "x1"))
    sp = cycle_splits(r12, r23, r34, r41, threshold)
    thr = sp.threshold
    s12 = degree_split(r12, ("x1",), thr)
    s23 = degree_split(r23, ("x2",), thr)
    s34 = degree_split(r34, ("x3",), thr)
    s41 = degree_split(r41, ("x4",), thr)
    sr = r12.semiring

    def union(a: AnnotatedRelation, b: AnnotatedRelation) -> AnnotatedRelation:
        rows = dict(a.rows)
        rows.update(b.reorder(a.schema).rows)  # the two pieces are disjoint
        return AnnotatedRelation(a.schema, rows, sr)

    def join(*parts, order):
        rel = multiway_join(list(parts), order, counters)
        counters.tuples_materialized += len(rel)
        return rel

    # part A: bag 123 holds (x2 light in R23) or (x1 heavy in R12); bag 341 likewise shifted
    bag123 = union(join(r12, s23.light, order=["x1", "x2", "x3"]),
                   join(s12.heavy, s23.heavy, order=["x1", "x2", "x3"]))
    bag341 = union(join(r34, s41.light, order=["x3", "x4", "x1"]),
                   join(s34.heavy, s41.heavy, order=["x3", "x4", "x1"]))
    total = _two_bag_total(bag123, bag341, counters)

    # part B1: x2 heavy in R23 and x1 light in R12
    bag234 = join(s23.heavy, r34, order=["x2", "x3", "x4"])
    bag412 = join(r41, s12.light, order=["x4", "x1", "x2"])
    total = sr.add(total, _two_bag_total(bag234, bag412, counters))

    # part B2: x3 light in R34, x4 heavy in R41, and (x2 light in R23 or x1 heavy in R12)
    heavy4 = {t[0] for t in s41.heavy.rows}
    bag234 = _select(join(r23, s34.light, order=["x2", "x3", "x4"]), lambda t: t["x4"] in heavy4)
    bag412 = _select(join(s41.heavy, r12, order=["x4", "x1", "x2"]),
                     lambda t: (t["x2"],) in sp.light2 or (t["x1"],) not in sp.light1)
    total = sr.add(total, _two_bag_total(bag234, bag412, counters))
    return total


@dataclass
class PathResult:
    value: object
    u_size: int
    w_size: int
    threshold: int
    n: int


def count_path_ineq(db: Database, ligament: Ligament, names=("R", "S", "T"),
                    counters: Counters | None = None, threshold: int | None = None) -> PathResult:
    """Sum over a,b,c,d of R(a,b) S(b,c) T(c,d) restricted by one ligament over {a,b,c,d}.

    S is split on b.  The light part is evaluated over bags {a,b,c} | {c,d} with
    U = R join S_light, the heavy part over {a,b} | {b,c,d} with W = S_heavy join T.
    """
    counters = counters if counters is not None else Counters()
    R = _binary(db[names[0]], ("a", "b"))
    S = _binary(db[names[1]], ("b", "c"))
    T = _binary(db[names[2]], ("c", "d"))
    if not ligament.vars <= {"a", "b", "c", "d"}:
        raise StructuralError(f"ligament over {sorted(ligament.vars)} is not over a,b,c,d")
    n = max(len(R), len(S), len(T))
    thr = isqrt(n) if threshold is None else threshold
    split = degree_split(S, ("b",), thr)
    sr = R.semiring

    U = multiway_join([R, split.light], ["a", "b", "c"], counters)
    W = multiway_join([split.heavy, T], ["b", "c", "d"], counters)
    counters.tuples_materialized += len(U) + len(W)

    def branch(parent, leaf):
        spans = not (ligament.vars <= set(parent.schema) or ligament.vars <= set(leaf.schema))
        if spans:
            folded = two_bag_eliminate(parent, leaf, [ligament], db, counters)
        else:
            bound = [(ligament.bind(db), ligament.strict)]
            if ligament.vars <= set(parent.schema):
                parent = filter_rows(parent, bound)
            else:
                leaf = filter_rows(leaf, bound)
            folded = two_bag_eliminate(parent, leaf, (), db, counters)
        return group_aggregate(folded, ()).scalar()

    light_total = branch(T, U)
    heavy_total = branch(R, W)
    return PathResult(sr.add(light_total, heavy_total), len(U), len(W), thr, n)

"""Brute-force references: nested-loop query evaluation and possible worlds.

Every budget fails loudly instead of truncating.
"""
from __future__ import annotations

from itertools import product

import numpy as np

from .errors import CapacityError
from .probiq import IQQuery, factor_probabilities
from .query import FaqAiQuery, holds
from .relation import AnnotatedRelation, Database

EVAL_BUDGET = 10 ** 6
WORLD_BUDGET = 20


def oracle_eval(db: Database, q: FaqAiQuery, budget: int = EVAL_BUDGET) -> AnnotatedRelation:
    """Literal sum over all assignments consistent with the stored factors."""
    sr = q.semiring
    rels = [q.factor_relation(db, i) for i in range(len(q.factors))]
    ligs = [(lg.bind(db), lg.strict) for lg in q.ligaments]
    free = list(q.free)
    out = {}
    steps = [0]
    assign = {}

    def rec(i, acc):
        steps[0] += 1
        if steps[0] > budget:
            raise CapacityError(f"nested-loop oracle exceeded {budget} steps")
        if i == len(rels):
            for terms, strict in ligs:
                if not holds(sum(f(assign[v]) for v, f in terms), strict):
                    return
            key = tuple(assign[v] for v in free)
            out[key] = sr.add(out[key], acc) if key in out else acc
            return
        r = rels[i]
        for t, a in r.rows.items():
            bound = []
            ok = True
            for v, x in zip(r.schema, t):
                if v in assign:
                    if assign[v] != x:
                        ok = False
                        break
                else:
                    assign[v] = x
                    bound.append(v)
            if ok:
                rec(i + 1, sr.mul(acc, a))
            for v in bound:
                del assign[v]

    missing = set(q.variables) - {v for f in q.factors for v in f.vars}
    if missing:
        raise CapacityError(f"variables {sorted(missing)} are unbounded")
    rec(0, sr.one)
    return AnnotatedRelation(free, out, sr)


def oracle_worlds(db: Database, q: IQQuery, budget: int = WORLD_BUDGET) -> float:
    """Sum over all 2^m possible worlds of world probability times query truth."""
    rels = [factor_probabilities(db, f) for f in q.factors]
    tuples = [(fi, t, float(p)) for fi, r in enumerate(rels) for t, p in r.sorted_items()]
    m = len(tuples)
    if m > budget:
        raise CapacityError(f"{m} tuples exceed the possible-worlds budget of {budget}")
    offsets, k = [], 0
    for r in rels:
        offsets.append(k)
        k += len(r)
    # a witness picks one tuple per factor such that every inequality holds
    pos = {}
    for fi, f in enumerate(q.factors):
        for j, v in enumerate(f.vars):
            pos[v] = (fi, j)
    masks = set()
    per_factor = [list(enumerate(r.sorted_items())) for r in rels]
    for choice in product(*per_factor):
        ok = True
        for a, b in q.inequalities:
            fa, ja = pos[a]
            fb, jb = pos[b]
            if not choice[fa][1][0][ja] <= choice[fb][1][0][jb]:
                ok = False
                break
        if ok:
            masks.add(sum(1 << (offsets[fi] + idx) for fi, (idx, _) in enumerate(choice)))
    worlds = np.arange(1 << m, dtype=np.int64)
    p = np.array([t[2] for t in tuples])
    wp = np.ones(1 << m)
    for i in range(m):
        bit = (worlds >> i) & 1
        wp *= np.where(bit == 1, p[i], 1.0 - p[i])
    true = np.zeros(1 << m, dtype=bool)
    for mask in masks:
        true |= (worlds & mask) == mask
    return float(wp[true].sum())

"""Seeded random instance generators shared by tests, examples and the CLI bench."""
from __future__ import annotations

import random
from math import isqrt

from .hypergraph import Hypergraph
from .query import FaqAiQuery, Factor, Ligament, UnaryTerm
from .relation import AnnotatedRelation, Database
from .semiring import BOOLEAN, COUNT, REAL, Semiring

VAR_NAMES = "abcdefghij"


def random_hypergraph(rng: random.Random, max_vertices: int = 5, max_edges: int = 5,
                      max_ligaments: int = 2) -> Hypergraph:
    n = rng.randint(2, max_vertices)
    verts = list(VAR_NAMES[:n])
    while True:
        m = rng.randint(1, max_edges)
        skel = [rng.sample(verts, rng.randint(1, min(3, n))) for _ in range(m)]
        if set().union(*map(set, skel)) == set(verts):
            break
    ligs = [rng.sample(verts, rng.randint(2, n)) for _ in range(rng.randint(0, max_ligaments))]
    return Hypergraph(verts, skel, ligs)


def random_annotation(rng: random.Random, sr: Semiring):
    if sr is BOOLEAN:
        return True
    if sr is COUNT:
        return rng.randint(1, 3)
    return rng.uniform(0.5, 2.0)


def random_relation(rng: random.Random, arity: int, n: int, domain: int, sr: Semiring,
                    schema=None) -> AnnotatedRelation:
    schema = schema or [f"c{i}" for i in range(arity)]
    rows = {}
    for _ in range(n):
        rows[tuple(rng.randrange(domain) for _ in range(arity))] = random_annotation(rng, sr)
    return AnnotatedRelation(schema, rows, sr)


def random_term(rng: random.Random, var: str) -> UnaryTerm:
    kind = rng.choice(("affine", "affine", "square", "negsquare"))
    if kind == "affine":
        return UnaryTerm(var, kind, float(rng.randint(-3, 3)), float(rng.randint(-3, 3)))
    return UnaryTerm(var, kind, float(rng.randint(0, 2)), float(rng.randint(-2, 2)))


def random_query_instance(rng: random.Random, semiring: Semiring | None = None, max_vars: int = 5,
                          max_factors: int = 4, max_ligaments: int = 2, max_rows: int = 20,
                          domain: int = 4):
    """A random FAQ-AI query over integer data with integer-coefficient terms.

    Integer data and coefficients keep every term sum exact in floating point, so
    inequality outcomes do not depend on the order of summation.
    """
    sr = semiring or rng.choice((BOOLEAN, COUNT, REAL))
    n = rng.randint(1, max_vars)
    verts = list(VAR_NAMES[:n])
    while True:
        m = rng.randint(1, max_factors)
        edges = [tuple(rng.sample(verts, rng.randint(1, min(3, n)))) for _ in range(m)]
        if set().union(*map(set, edges)) == set(verts):
            break
    db = Database(sr)
    factors = []
    for i, e in enumerate(edges):
        name = f"R{i}"
        db.add(name, random_relation(rng, len(e), rng.randint(0, max_rows), domain, sr))
        factors.append(Factor(e, name))
    ligs = []
    for _ in range(rng.randint(0, max_ligaments)):
        S = rng.sample(verts, rng.randint(1, n))
        ligs.append(Ligament(tuple(random_term(rng, v) for v in S), rng.random() < 0.5))
    free = [v for v in verts if rng.random() < 0.3]
    return db, FaqAiQuery(verts, factors, ligs, free, sr)


def path_instance(rng: random.Random, n: int, adversarial: bool = False,
                  semiring: Semiring = COUNT) -> Database:
    """Relations R(a,b), S(b,c), T(c,d) with about ``n`` rows each.

    The adversarial layout has two stars that survive semijoin pruning: one
    through a heavy b value (R x S is quadratic) and one through a shared c value
    whose b values are light (S x T is quadratic).  Either two-bag decomposition
    alone is quadratic.  A dense grid block adds a light part costing n**1.5.
    """
    if not adversarial:
        dom = max(2, n)
        return Database(semiring, {
            name: random_relation(rng, 2, n, dom, semiring, ["x", "y"]) for name in ("R", "S", "T")})
    star, side = n // 4, max(1, isqrt(n) // 2)
    hub_b, hub_c = -1, -2
    R, S, T = {}, {}, {}
    w = lambda: random_annotation(rng, semiring)  # noqa: E731
    for i in range(star):
        R[(i, hub_b)] = w()
        S[(hub_b, n + i)] = w()
        T[(n + i, n + i)] = w()
        R[(2 * n + i, 2 * n + i)] = w()
        S[(2 * n + i, hub_c)] = w()
        T[(hub_c, 3 * n + i)] = w()
    for i in range(side):
        for j in range(side):
            R[(4 * n + i, 5 * n + j)] = w()
            S[(5 * n + i, 6 * n + j)] = w()
            T[(6 * n + i, 7 * n + j)] = w()
    return Database(semiring, {"R": AnnotatedRelation(("x", "y"), R, semiring),
                               "S": AnnotatedRelation(("x", "y"), S, semiring),
                               "T": AnnotatedRelation(("x", "y"), T, semiring)})


def cycle_instance(rng: random.Random, n: int, adversarial: bool = False,
                   semiring: Semiring = COUNT) -> Database:
    """Relations R12, R23, R34, R41 for the 4-cycle count."""
    names = ("R12", "R23", "R34", "R41")
    if not adversarial:
        dom = max(2, int(n ** 0.5) * 2)
        return Database(semiring, {nm: random_relation(rng, 2, n, dom, semiring, ["x", "y"])
                                   for nm in names})
    # half the rows leave one hub, half the rows enter another
    rels = {}
    for nm in names:
        rows = {}
        for i in range(n // 2):
            rows[(0, i + 1)] = random_annotation(rng, semiring)
            rows[(i + 1, 0)] = random_annotation(rng, semiring)
        rels[nm] = AnnotatedRelation(("x", "y"), rows, semiring)
    return Database(semiring, rels)


def random_feature_instance(rng: random.Random, labels: str = "real", rows: int = 8,
                            domain: int = 5, d: int = 3):
    """A two-relation feature join R(x1, k) |x| S(k, x2, y) over the real semiring.

    ``labels`` is "real", "binary" (+1/-1), "ordinal" (1..d) or "none".
    Returns (database, factors, features, label).
    """
    def label():
        if labels == "binary":
            return rng.choice((-1, 1))
        if labels == "ordinal":
            return rng.randint(1, d)
        return rng.randint(-3, 3)

    keys = max(2, domain // 2)
    R = {(rng.randint(-domain, domain), rng.randrange(keys)): 1.0 for _ in range(rows)}
    if labels == "none":
        S = {(rng.randrange(keys), rng.randint(-domain, domain)): 1.0 for _ in range(rows)}
        schema, factors = ("k", "x2"), [Factor(("x1", "k"), "R"), Factor(("k", "x2"), "S")]
    else:
        S = {(rng.randrange(keys), rng.randint(-domain, domain), label()): 1.0 for _ in range(rows)}
        schema, factors = ("k", "x2", "y"), [Factor(("x1", "k"), "R"), Factor(("k", "x2", "y"), "S")]
    db = Database(REAL, {"R": AnnotatedRelation(("x1", "k"), R, REAL),
                         "S": AnnotatedRelation(schema, S, REAL)})
    return db, factors, ("x1", "x2"), (None if labels == "none" else "y")

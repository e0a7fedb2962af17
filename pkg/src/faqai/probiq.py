"""Exact probability of inequality-join queries over tuple-independent relations.

A query joins factors with pairwise disjoint variables; each factor has at most
one variable taking part in inequalities ``X <= Y``.  After reducing every
factor to a unary (or nullary) probability table, the inequality forest is
processed bottom-up.  For a node with sorted values v_1 < ... < v_m (for an
out-directed tree, where children are >= their parent),

    A(v_i) = S(v_i) * prod_children A_c(lub_c(v_i)) + (1 - S(v_i)) * A(v_{i+1})

is the probability that some true value >= v_i of the node has, in every child
subtree, a satisfying value at least as large.  The two summands are disjoint
events, and all factors are independent, so the recursion is exact.
In-directed trees are handled by mirroring the order.
"""
from __future__ import annotations

import json
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ShapeError, StructuralError
from .relation import AnnotatedRelation, Database, load_database
from .semiring import REAL


@dataclass(frozen=True)
class IQFactor:
    relation: str
    vars: tuple
    ineq_var: str | None = None


@dataclass
class IQQuery:
    factors: list
    inequalities: list            # (x, y) pairs meaning x <= y

    def __post_init__(self):
        self.factors = [f if isinstance(f, IQFactor) else IQFactor(f[0], tuple(f[1]), *f[2:])
                        for f in self.factors]
        self.inequalities = [tuple(e) for e in self.inequalities]
        seen = {}
        for f in self.factors:
            for v in f.vars:
                if v in seen:
                    raise ShapeError(f"variable {v!r} appears in factors {seen[v]!r} and {f.relation!r};"
                                     " factors must have disjoint variables")
                seen[v] = f.relation
        ineq_vars = {v for e in self.inequalities for v in e}
        for f in self.factors:
            used = [v for v in f.vars if v in ineq_vars]
            if len(used) > 1:
                raise ShapeError(f"factor {f.relation!r} has several inequality variables {used}")
            declared = f.ineq_var
            if declared is not None and declared not in f.vars:
                raise ShapeError(f"factor {f.relation!r} declares inequality variable {declared!r}"
                                 " outside its schema")
            if declared is not None and used and used[0] != declared:
                raise ShapeError(f"factor {f.relation!r} declares {declared!r} but {used[0]!r} is compared")
        for e in self.inequalities:
            if len(e) != 2 or e[0] == e[1]:
                raise ShapeError(f"inequality {e} must relate two distinct variables")
            for v in e:
                if v not in seen:
                    raise ShapeError(f"inequality variable {v!r} belongs to no factor")

    def node_factor(self) -> dict:
        ineq_vars = {v for e in self.inequalities for v in e}
        return {v: f for f in self.factors for v in f.vars if v in ineq_vars}

    def to_json(self) -> dict:
        return {"factors": [{"relation": f.relation, "vars": list(f.vars),
                             **({"ineq_var": f.ineq_var} if f.ineq_var else {})} for f in self.factors],
                "inequalities": [list(e) for e in self.inequalities]}


def iq_from_json(d: dict) -> IQQuery:
    try:
        return IQQuery([IQFactor(f["relation"], tuple(f["vars"]), f.get("ineq_var"))
                        for f in d["factors"]], d.get("inequalities", []))
    except (KeyError, TypeError) as e:
        raise StructuralError(f"malformed IQ query: {e!r}") from None


def load_iq(path, data_dir) -> tuple:
    with open(path, encoding="utf-8") as f:
        q = iq_from_json(json.load(f))
    db = load_database(Path(data_dir), REAL, {f.relation for f in q.factors})
    return q, db


def factor_probabilities(db: Database, f: IQFactor) -> AnnotatedRelation:
    rel = db[f.relation]
    if len(rel.schema) != len(f.vars):
        raise StructuralError(f"relation {f.relation!r} has arity {len(rel.schema)}, "
                              f"query expects {len(f.vars)}")
    for t, p in rel.rows.items():
        if not 0.0 <= float(p) <= 1.0:
            raise StructuralError(f"relation {f.relation!r} tuple {t} has probability {p} outside [0,1]")
    return rel.rename(f.vars)


@dataclass
class UnaryTables:
    tables: dict          # inequality variable -> {value: probability}
    nullary: float


def reduce_to_unary(db: Database, q: IQQuery) -> UnaryTables:
    """Probability that some tuple is true, grouped by the inequality variable."""
    nodes = q.node_factor()
    tables = {}
    nullary = 1.0
    for f in q.factors:
        rel = factor_probabilities(db, f)
        var = next((v for v in f.vars if v in nodes), None)
        if var is None:
            miss = 1.0
            for p in rel.rows.values():
                miss *= 1.0 - float(p)
            nullary *= 1.0 - miss
            continue
        i = f.vars.index(var)
        miss = {}
        for t, p in rel.rows.items():
            miss[t[i]] = miss.get(t[i], 1.0) * (1.0 - float(p))
        tables[var] = {x: 1.0 - m for x, m in miss.items()}
    return UnaryTables(tables, nullary)


@dataclass
class InequalityGraph:
    nodes: tuple
    edges: frozenset                 # (x, y) meaning x <= y

    def successors(self) -> dict:
        out = {v: [] for v in self.nodes}
        for a, b in sorted(self.edges):
            out[a].append(b)
        return out


def _reach(nodes, edges) -> dict:
    succ = {v: set() for v in nodes}
    for a, b in edges:
        succ[a].add(b)
    reach = {}
    for v in nodes:
        seen, stack = set(), list(succ[v])
        while stack:
            w = stack.pop()
            if w not in seen:
                seen.add(w)
                stack.extend(succ[w])
        reach[v] = seen
    return reach


def transitive_reduce(g: InequalityGraph) -> InequalityGraph:
    """Drop implied inequalities; the result must be a forest."""
    reach = _reach(g.nodes, g.edges)
    if any(v in reach[v] for v in g.nodes):
        raise ShapeError("inequalities form a cycle")
    kept = set()
    for a, b in g.edges:
        implied = any(b in reach[d] for x, d in g.edges if x == a and d != b)
        if not implied:
            kept.add((a, b))
    red = InequalityGraph(g.nodes, frozenset(kept))
    _forest_check(red)
    return red


def _forest_check(g: InequalityGraph):
    parent = {v: v for v in g.nodes}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in g.edges:
        ra, rb = find(a), find(b)
        if ra == rb:
            raise ShapeError("reduced inequality graph is not a forest; graph-shaped"
                             " inequalities need variable elimination, which is not supported")
        parent[ra] = rb


def _components(g: InequalityGraph) -> list:
    adj = {v: set() for v in g.nodes}
    for a, b in g.edges:
        adj[a].add(b)
        adj[b].add(a)
    seen, comps = set(), []
    for v in g.nodes:
        if v in seen:
            continue
        comp, stack = [], [v]
        seen.add(v)
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in sorted(adj[u]):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def _orient(g: InequalityGraph, comp: list) -> tuple:
    """Root and child lists of a tree whose edges all point away from (or all toward) one root."""
    edges = [(a, b) for a, b in g.edges if a in comp]
    indeg = {v: 0 for v in comp}
    outdeg = {v: 0 for v in comp}
    for a, b in edges:
        indeg[b] += 1
        outdeg[a] += 1
    if all(d <= 1 for d in indeg.values()):
        root = next(v for v in comp if indeg[v] == 0)
        children = {v: sorted(b for a, b in edges if a == v) for v in comp}
        return root, children, True
    if all(d <= 1 for d in outdeg.values()):
        root = next(v for v in comp if outdeg[v] == 0)
        children = {v: sorted(a for a, b in edges if b == v) for v in comp}
        return root, children, False
    raise ShapeError(f"inequality tree over {comp} mixes directions; only trees whose inequalities"
                     " all point away from, or all toward, one root are supported")


@dataclass
class IQTrace:
    probability: float
    nullary: float
    roots: list
    tables: dict = field(default_factory=dict)     # node -> (sorted values, A values)


def iq_probability(db: Database, q: IQQuery, trace: bool = False):
    """Probability that the query has a satisfying derivation."""
    red = reduce_to_unary(db, q)
    nodes = tuple(sorted(q.node_factor()))
    g = transitive_reduce(InequalityGraph(nodes, frozenset(q.inequalities)))
    prob = red.nullary
    roots = []
    computed = {}
    for comp in _components(g):
        root, children, upward = _orient(g, comp)
        roots.append(root)
        # post-order over the tree
        order, stack = [], [root]
        while stack:
            u = stack.pop()
            order.append(u)
            stack.extend(children[u])
        for u in reversed(order):
            S = red.tables.get(u, {})
            vals = sorted(S) if upward else sorted(S, reverse=True)
            A = [0.0] * (len(vals) + 1)
            for i in range(len(vals) - 1, -1, -1):
                x = vals[i]
                inner = 1.0
                for c in children[u]:
                    cv, cA = computed[c]
                    inner *= cA[_lub(cv, x, upward)]
                s = S[x]
                A[i] = s * inner + (1.0 - s) * A[i + 1]
            computed[u] = (vals, A)
        prob *= computed[root][1][0]
    if trace:
        return IQTrace(prob, red.nullary, roots, computed)
    return prob


def _lub(vals: list, x, upward: bool) -> int:
    """Index of the first child value >= x (<= x for mirrored trees)."""
    if upward:
        return bisect_left(vals, x)
    # vals descending: first index with value <= x
    lo, hi = 0, len(vals)
    while lo < hi:
        mid = (lo + hi) // 2
        if vals[mid] <= x:
            hi = mid
        else:
            lo = mid + 1
    return lo

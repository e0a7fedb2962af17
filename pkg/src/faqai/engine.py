"""InsideOut over relaxed tree decompositions.

Bags are eliminated leaf-first.  A ligament that fits in one bag filters that
bag's factor; a ligament spanning a leaf and its parent is folded in during the
leaf's elimination by dominance queries: for each ligament S the leaf side
contributes the point coordinate  -sum_{v in S\\U} theta_v  and the parent side
the query coordinate  sum_{v in S&U} theta_v,  so the indicator holds exactly
when the query is dominated by the point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .dominance import LE, LT, DominanceIndex
from .errors import PlanningError
from .hypergraph import TreeDecomposition, bag_key, enumerate_tds, validate_relaxed
from .query import FaqAiQuery, holds
from .relation import (AnnotatedRelation, Counters, Database, group_aggregate,
                       indicator_projection, multiway_join)
from .widths import FAMILY_NOTE, td_width

ROUTING_NOTE = ("each spanning ligament goes to the earliest leaf elimination whose two bags"
                " cover it; the routing rule is a choice, not derived")


@dataclass
class EvalPlan:
    td: TreeDecomposition
    width: Fraction
    root: int
    parent: dict
    core: frozenset
    elimination: list          # non-core nodes, leaves first
    assignment: list           # factor index -> node
    absorbed: dict             # node -> ligament indices filtered inside the bag
    routed: dict               # node -> ligament indices handled when the node is eliminated
    core_filters: list         # ligaments spanning two core bags
    notes: list = field(default_factory=list)

    def describe(self) -> dict:
        return {"td": self.td.describe(), "width": str(self.width), "root": self.root,
                "elimination": self.elimination, "assignment": self.assignment,
                "absorbed": {str(k): v for k, v in sorted(self.absorbed.items())},
                "routed": {str(k): v for k, v in sorted(self.routed.items())},
                "core": sorted(self.core), "core_filters": self.core_filters,
                "notes": self.notes}


def _rooted(td: TreeDecomposition, root: int):
    adj = td.neighbors()
    parent = {root: None}
    order = [root]
    for u in order:
        for w in sorted(adj[u]):
            if w not in parent:
                parent[w] = u
                order.append(w)
    return parent, order


def plan(q: FaqAiQuery, relaxed: bool = True, td: TreeDecomposition | None = None) -> EvalPlan:
    """Choose a minimum-width (relaxed) connex decomposition and route every ligament."""
    h = q.hypergraph()
    free = frozenset(q.free)
    if td is None:
        tds = _cached_tds(h, free, relaxed)
        if not tds:
            raise PlanningError("no valid decomposition in the enumerated family")
        scored = [(td_width(h, t), i) for i, t in enumerate(tds)]
        td = tds[min(scored)[1]]
    cert = validate_relaxed(td, h, free, relaxed=True)
    if not cert.valid:
        raise PlanningError("; ".join(cert.violations))
    td = TreeDecomposition(td.bags, td.edges, cert.core)
    core = cert.core
    root = min(core) if core else 0
    parent, bfs = _rooted(td, root)
    elimination = [u for u in reversed(bfs) if u not in core and u != root]
    step = {u: k for k, u in enumerate(elimination)}

    assignment = []
    for f in q.factors:
        e = frozenset(f.vars)
        node = next((i for i, b in enumerate(td.bags) if e <= b), None)
        if node is None:
            raise PlanningError(f"factor {f.relation}{f.vars} is covered by no bag")
        assignment.append(node)

    absorbed, routed, core_filters = {}, {}, []
    for li, lg in enumerate(q.ligaments):
        S = lg.vars
        inside = [i for i, b in enumerate(td.bags) if S <= b]
        if inside:
            absorbed.setdefault(inside[0], []).append(li)
            continue
        hosts = [u for u in elimination if S <= td.bags[u] | td.bags[parent[u]]]
        if hosts:
            u = min(hosts, key=step.get)
            routed.setdefault(u, []).append(li)
            continue
        spans_core = any(parent[u] is not None and S <= td.bags[u] | td.bags[parent[u]] for u in core)
        if not spans_core:
            raise PlanningError(f"ligament {bag_key(S)} is not covered by two adjacent bags")
        core_filters.append(li)
    notes = [FAMILY_NOTE, ROUTING_NOTE]
    return EvalPlan(td, td_width(h, td), root, parent, core, elimination, assignment,
                    absorbed, routed, core_filters, notes)


@lru_cache(maxsize=512)
def _cached_tds(h, free, relaxed):
    return enumerate_tds(h, free, relaxed)


def filter_rows(rel: AnnotatedRelation, bound_ligs) -> AnnotatedRelation:
    if not bound_ligs:
        return rel
    checks = []
    for terms, strict in bound_ligs:
        checks.append(([(rel.schema.index(v), f) for v, f in terms], strict))
    rows = {}
    for t, a in rel.rows.items():
        if all(holds(sum(f(t[i]) for i, f in terms), strict) for terms, strict in checks):
            rows[t] = a
    return AnnotatedRelation(rel.schema, rows, rel.semiring)


def _bind(q: FaqAiQuery, db: Database, idxs):
    return [(q.ligaments[i].bind(db), q.ligaments[i].strict) for i in idxs]


def bag_factor(db: Database, q: FaqAiQuery, p: EvalPlan, t: int,
               counters: Counters | None = None) -> AnnotatedRelation:
    """Product of the factors assigned to bag ``t`` with indicator projections of
    every other finite factor that meets the bag, filtered by absorbed ligaments."""
    counters = counters if counters is not None else Counters()
    bag = p.td.bags[t]
    parts = []
    for i, f in enumerate(q.factors):
        if p.assignment[i] == t:
            parts.append(q.factor_relation(db, i))
    for i, f in enumerate(q.factors):
        if p.assignment[i] != t and f.finite and bag & set(f.vars):
            parts.append(indicator_projection(q.factor_relation(db, i), bag))
    order = [v for v in q.variables if v in bag]
    rel = multiway_join(parts, order, counters)
    rel = filter_rows(rel, _bind(q, db, p.absorbed.get(t, [])))
    counters.tuples_materialized += len(rel)
    return rel


def two_bag_eliminate(parent: AnnotatedRelation, leaf: AnnotatedRelation, ligaments=(),
                      db: Database | None = None, counters: Counters | None = None) -> AnnotatedRelation:
    """Fold ``leaf`` into ``parent``: parent times the leaf aggregated over its private
    variables, restricted by the ligaments that span both bags."""
    counters = counters if counters is not None else Counters()
    sr = parent.semiring
    U, L = parent.schema, leaf.schema
    Uset, Lset = set(U), set(L)
    shared = [v for v in L if v in Uset]
    lpos = [L.index(v) for v in shared]
    upos = [U.index(v) for v in shared]
    ligs = list(ligaments)
    for lg in ligs:
        S = lg.vars
        if not S <= Uset | Lset or S <= Uset or S <= Lset:
            raise PlanningError(f"ligament {bag_key(S)} cannot be handled between {U} and {L}")
    mul, add, zero = sr.mul, sr.add, sr.zero
    out = {}

    if not ligs:
        agg = {}
        for t, a in leaf.rows.items():
            k = tuple(t[i] for i in lpos)
            agg[k] = add(agg[k], a) if k in agg else a
        for t, a in parent.rows.items():
            k = tuple(t[i] for i in upos)
            if k in agg:
                v = mul(a, agg[k])
                if v != zero:
                    out[t] = v
        counters.tuples_materialized += len(out)
        return AnnotatedRelation(U, out, sr)

    leaf_terms, parent_terms = [], []
    for lg in ligs:
        bound = lg.bind(db)
        leaf_terms.append([(L.index(v), f) for v, f in bound if v not in Uset])
        parent_terms.append([(U.index(v), f) for v, f in bound if v in Uset])
    strictness = tuple(LT if lg.strict else LE for lg in ligs)
    k = len(ligs)

    buckets = {}
    for t, a in leaf.rows.items():
        key = tuple(t[i] for i in lpos)
        p = tuple(-sum(f(t[i]) for i, f in terms) for terms in leaf_terms)
        buckets.setdefault(key, []).append((p, a))
    indexes = {}
    for t, a in parent.rows.items():
        key = tuple(t[i] for i in upos)
        pts = buckets.get(key)
        if pts is None:
            continue
        q = tuple(sum(f(t[i]) for i, f in terms) for terms in parent_terms)
        if len(pts) == 1:
            counters.dominance_queries += 1
            (pt, w), = pts
            ok = all((qi < pi) if s == LT else (qi <= pi) for qi, pi, s in zip(q, pt, strictness))
            val = w if ok else zero
        else:
            idx = indexes.get(key)
            if idx is None:
                idx = indexes[key] = DominanceIndex(pts, k, strictness, sr, counters)
            val = idx.query(q)
        if val != zero:
            v = mul(a, val)
            if v != zero:
                out[t] = v
    counters.tuples_materialized += len(out)
    return AnnotatedRelation(U, out, sr)


def evaluate(db: Database, q: FaqAiQuery, p: EvalPlan | None = None,
             counters: Counters | None = None, relaxed: bool = True) -> AnnotatedRelation:
    """Answer the query as a relation over its free variables (nullary when none)."""
    counters = counters if counters is not None else Counters()
    if db.semiring is not q.semiring:
        raise PlanningError(f"database semiring {db.semiring.id} differs from query's {q.semiring.id}")
    p = p if p is not None else plan(q, relaxed)
    factors = {t: bag_factor(db, q, p, t, counters) for t in range(len(p.td.bags))}
    for u in p.elimination:
        par = p.parent[u]
        ligs = [q.ligaments[i] for i in p.routed.get(u, [])]
        factors[par] = two_bag_eliminate(factors[par], factors.pop(u), ligs, db, counters)
    if not q.free:
        return group_aggregate(factors[p.root], ())
    core = sorted(p.core)
    joined = multiway_join([factors[t] for t in core], list(q.free), counters)
    joined = filter_rows(joined, _bind(q, db, p.core_filters))
    counters.tuples_materialized += len(joined)
    return joined

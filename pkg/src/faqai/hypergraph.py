"""Hypergraphs with skeleton and ligament edges, and their tree decompositions.

Tree decompositions here may be *relaxed*: a ligament edge only has to fit
inside one bag or inside the union of two adjacent bags.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from .errors import CapacityError, StructuralError

MAX_TD_VERTICES = 10


def _fs(vs) -> frozenset:
    return frozenset(vs)


def bag_key(bag) -> tuple:
    return tuple(sorted(bag))


@dataclass(frozen=True)
class Hypergraph:
    vertices: frozenset
    skeleton: tuple          # tuple of frozensets, may repeat
    ligaments: tuple = ()
    finite: tuple = None     # per skeleton edge; default all finite

    def __init__(self, vertices: Iterable, skeleton: Iterable[Iterable], ligaments: Iterable[Iterable] = (),
                 finite: Sequence[bool] | None = None):
        skel = tuple(_fs(e) for e in skeleton)
        ligs = tuple(_fs(e) for e in ligaments)
        fin = tuple(True for _ in skel) if finite is None else tuple(bool(f) for f in finite)
        if len(fin) != len(skel):
            raise StructuralError("finite flags must match skeleton edges")
        verts = _fs(vertices)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "skeleton", skel)
        object.__setattr__(self, "ligaments", ligs)
        object.__setattr__(self, "finite", fin)
        for e in skel + ligs:
            if not e <= verts:
                raise StructuralError(f"edge {sorted(e)} not inside vertex set {sorted(verts)}")
        covered = set().union(*self.finite_edges) if self.finite_edges else set()
        if covered != verts:
            raise StructuralError(f"finite edges do not cover {sorted(verts - covered)}")

    @property
    def finite_edges(self) -> tuple:
        return tuple(e for e, f in zip(self.skeleton, self.finite) if f)

    def key(self) -> tuple:
        return (bag_key(self.vertices),
                tuple(sorted((bag_key(e), f) for e, f in zip(self.skeleton, self.finite))),
                tuple(sorted(bag_key(e) for e in self.ligaments)))


@dataclass(frozen=True)
class TreeDecomposition:
    bags: tuple                    # tuple of frozensets
    edges: tuple = ()              # tuple of (i, j) with i < j
    core: frozenset | None = None  # node indices of the F-connex core

    def __post_init__(self):
        object.__setattr__(self, "bags", tuple(_fs(b) for b in self.bags))
        object.__setattr__(self, "edges", tuple(sorted((min(i, j), max(i, j)) for i, j in self.edges)))
        if self.core is not None:
            object.__setattr__(self, "core", frozenset(self.core))

    def neighbors(self) -> list:
        adj = [[] for _ in self.bags]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def is_tree(self) -> bool:
        n = len(self.bags)
        if n == 0 or len(self.edges) != n - 1:
            return False
        return len(_component(self.neighbors(), 0, range(n))) == n

    def canonical(self) -> "TreeDecomposition":
        order = sorted(range(len(self.bags)), key=lambda i: bag_key(self.bags[i]))
        new = {old: k for k, old in enumerate(order)}
        core = None if self.core is None else frozenset(new[c] for c in self.core)
        return TreeDecomposition(tuple(self.bags[i] for i in order),
                                 tuple((new[i], new[j]) for i, j in self.edges), core)

    def key(self) -> tuple:
        c = self.canonical()
        return (tuple(bag_key(b) for b in c.bags), c.edges)

    def bag_sets(self) -> frozenset:
        return frozenset(self.bags)

    def describe(self) -> dict:
        return {"bags": [list(bag_key(b)) for b in self.bags],
                "edges": [list(e) for e in self.edges],
                "core": None if self.core is None else sorted(self.core)}


def _component(adj, start, allowed) -> set:
    allowed = set(allowed)
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w in allowed and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def find_core(td: TreeDecomposition, free_vars) -> frozenset | None:
    """Node set of a connected subtree whose bag union is exactly ``free_vars``.

    Returns the empty set when ``free_vars`` is empty and None when no such
    subtree exists.
    """
    free = _fs(free_vars)
    if not free:
        return frozenset()
    adj = td.neighbors()
    inside = [i for i, b in enumerate(td.bags) if b <= free]
    seen = set()
    for s in inside:
        if s in seen:
            continue
        comp = _component(adj, s, inside)
        seen |= comp
        if set().union(*(td.bags[i] for i in comp)) == free:
            return frozenset(comp)
    return None


@dataclass
class Certificate:
    valid: bool
    violations: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)  # per ligament: tuple of 1 or 2 node indices
    core: frozenset | None = None

    def witness_bags(self, td: TreeDecomposition) -> list:
        return [tuple(td.bags[i] for i in w) if w is not None else None for w in self.witnesses]


def validate_relaxed(td: TreeDecomposition, h: Hypergraph, free_vars=(), relaxed: bool = True) -> Certificate:
    """Check a (relaxed) F-connex tree decomposition and collect ligament witnesses."""
    viol = []
    n = len(td.bags)
    for b in td.bags:
        if not b <= h.vertices:
            viol.append(f"bag {bag_key(b)} has vertices outside the hypergraph")
    if not td.is_tree():
        viol.append("tree edges do not form a tree")
        return Certificate(False, viol, [None] * len(h.ligaments))
    adj = td.neighbors()
    for v in sorted(h.vertices):
        holders = [i for i in range(n) if v in td.bags[i]]
        if not holders:
            viol.append(f"vertex {v!r} is in no bag")
        elif len(_component(adj, holders[0], holders)) != len(holders):
            viol.append(f"running intersection fails for {v!r}")
    for e in h.skeleton:
        if not any(e <= b for b in td.bags):
            viol.append(f"skeleton edge {bag_key(e)} is in no bag")
    witnesses = []
    for e in h.ligaments:
        w = next(((i,) for i in range(n) if e <= td.bags[i]), None)
        if w is None and relaxed:
            w = next(((i, j) for i, j in td.edges if e <= td.bags[i] | td.bags[j]), None)
        if w is None:
            where = "two adjacent bags" if relaxed else "a bag"
            viol.append(f"ligament {bag_key(e)} is not covered by {where}")
        witnesses.append(w)
    core = find_core(td, free_vars)
    if core is None:
        viol.append(f"not connex for free variables {bag_key(free_vars)}")
    return Certificate(not viol, viol, witnesses, core)


def make_non_redundant(td: TreeDecomposition) -> TreeDecomposition:
    """Absorb contained bags into an adjacent superset bag until none remain.

    When a core is present, a core bag is only absorbed into another core bag so
    the decomposition stays connex.
    """
    bags = list(td.bags)
    adj = [set(a) for a in td.neighbors()]
    alive = set(range(len(bags)))
    core = None if td.core is None else set(td.core)

    def absorbable(a, b):
        if not bags[a] <= bags[b]:
            return False
        return core is None or a not in core or b in core

    changed = True
    while changed:
        changed = False
        for a in sorted(alive):
            target = next((b for b in sorted(adj[a]) if absorbable(a, b)), None)
            if target is None:
                continue
            for c in adj[a]:
                adj[c].discard(a)
                if c != target:
                    adj[c].add(target)
                    adj[target].add(c)
            adj[a] = set()
            alive.discard(a)
            if core is not None:
                core.discard(a)
            changed = True
            break
    idx = {old: k for k, old in enumerate(sorted(alive))}
    edges = {(min(idx[a], idx[b]), max(idx[a], idx[b])) for a in alive for b in adj[a]}
    new_core = None if core is None else frozenset(idx[c] for c in core)
    return TreeDecomposition(tuple(bags[i] for i in sorted(alive)), tuple(sorted(edges)), new_core)


def _primal(vertices, edges) -> dict:
    adj = {v: set() for v in vertices}
    for e in edges:
        for u in e:
            adj[u] |= e - {u}
    return adj


def _elimination_tds(vertices, edges, free) -> list:
    """Tree decompositions from every elimination order that removes V\\F before F."""
    vertices = sorted(vertices)
    free = set(free)
    adj0 = _primal(vertices, edges)
    results = []
    seen_states = set()

    def build(order, nbrs):
        pos = {v: k for k, v in enumerate(order)}
        bags = [frozenset({v} | nbrs[v]) for v in order]
        edges_ = []
        roots = []
        for k, v in enumerate(order):
            if nbrs[v]:
                u = min(nbrs[v], key=lambda x: pos[x])
                edges_.append((k, pos[u]))
            else:
                roots.append(k)
        edges_ += [(roots[i], roots[i + 1]) for i in range(len(roots) - 1)]
        return TreeDecomposition(tuple(bags), tuple(edges_))

    def rec(order, adj, nbrs):
        remaining = [v for v in vertices if v not in nbrs]
        if not remaining:
            results.append(build(order, nbrs))
            return
        pool = [v for v in remaining if v not in free] or remaining
        for v in pool:
            nb = frozenset(adj[v])
            new_nbrs = dict(nbrs)
            new_nbrs[v] = nb
            state = frozenset(new_nbrs.items())
            if state in seen_states:
                continue
            seen_states.add(state)
            new_adj = {u: set(s) for u, s in adj.items() if u != v}
            for u in nb:
                new_adj[u].discard(v)
                new_adj[u] |= nb - {u}
            rec(order + [v], new_adj, new_nbrs)

    rec([], adj0, {})
    return results


def _two_bag_covers(h: Hypergraph) -> list:
    verts = sorted(h.vertices)
    full = h.vertices
    subsets = [frozenset(c) for r in range(1, len(verts)) for c in combinations(verts, r)]
    out = []
    for b1 in subsets:
        rest = full - b1
        for b2 in subsets:
            if not rest <= b2 or b2 <= b1 or b1 <= b2 or bag_key(b1) >= bag_key(b2):
                continue
            if all(e <= b1 or e <= b2 for e in h.skeleton):
                out.append(TreeDecomposition((b1, b2), ((0, 1),)))
    return out


def enumerate_tds(h: Hypergraph, free_vars=(), relaxed: bool = False) -> list:
    """Candidate non-redundant F-connex tree decompositions, canonically sorted.

    Candidates come from elimination orders of the skeleton primal graph and of
    the full primal graph (skeleton plus ligaments); relaxed mode also adds every
    two-bag cover of the vertex set.  Each candidate is kept only if it passes
    ``validate_relaxed`` in the requested mode.
    """
    if len(h.vertices) > MAX_TD_VERTICES:
        raise CapacityError(f"{len(h.vertices)} vertices exceed the enumeration budget of {MAX_TD_VERTICES}")
    free = _fs(free_vars)
    if not free <= h.vertices:
        raise StructuralError(f"free variables {sorted(free - h.vertices)} are not vertices")
    graphs = [tuple(h.skeleton) + tuple(h.ligaments)]
    if relaxed and h.ligaments:
        graphs.append(tuple(h.skeleton))
    candidates = []
    for edges in graphs:
        candidates += _elimination_tds(h.vertices, edges, free)
    if relaxed:
        candidates += _two_bag_covers(h)
    out = {}
    for td in candidates:
        core = find_core(td, free)
        if core is None:
            continue
        td = make_non_redundant(TreeDecomposition(td.bags, td.edges, core)).canonical()
        cert = validate_relaxed(td, h, free, relaxed)
        if not cert.valid:
            continue
        td = TreeDecomposition(td.bags, td.edges, cert.core)
        out.setdefault(td.key(), td)
    return [out[k] for k in sorted(out)]

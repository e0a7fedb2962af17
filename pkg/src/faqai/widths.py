"""Exact width parameters of (relaxed) tree decompositions.

``rho_star`` is the fractional edge cover number of a bag.  The TD-based widths
take a min over the enumerated decomposition family of the max bag cost; the
submodular ones take, over every choice of one bag per decomposition, the LP
max of min chosen h(bag) over edge-dominated polymatroids (or E-polymatroids
when ``sharp``).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

from .errors import CapacityError, InfeasibleError, StructuralError
from .hypergraph import Hypergraph, TreeDecomposition, bag_key, enumerate_tds
from .lp import maximize, simplex_exact

MAX_H_VERTICES = 6
MAX_SELECTIONS = 10 ** 6
FAMILY_NOTE = ("best over the enumerated family: elimination-order decompositions"
               " plus, when relaxed, all two-bag covers")

SPACES = ("polymatroid", "e_polymatroid", "modular")


def threads() -> int:
    try:
        return max(1, int(os.environ.get("FAQAI_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class WidthReport:
    kind: str
    value: Fraction
    witness_td: TreeDecomposition | None = None
    witness_h: dict | None = None
    search_family_note: str = FAMILY_NOTE
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "value": fraction_str(self.value),
               "witness_td": None if self.witness_td is None else self.witness_td.describe(),
               "witness_h": None if self.witness_h is None else
               {",".join(k) if k else "{}": fraction_str(v) for k, v in sorted(self.witness_h.items())},
               "search_family_note": self.search_family_note}
        out.update(self.extra)
        return out


def fraction_str(v: Fraction) -> str:
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


@lru_cache(maxsize=65536)
def _rho_star_cached(finite_edges: tuple, target: frozenset) -> Fraction:
    if not target:
        return Fraction(0)
    tv = sorted(target)
    edges = [e & target for e in finite_edges]
    missing = [v for v in tv if not any(v in e for e in edges)]
    if missing:
        raise InfeasibleError(f"vertices {missing} are covered by no finite edge")
    # dual packing LP: max sum_v y_v  s.t.  sum_{v in K} y_v <= 1 for each finite edge K
    rows = [[1 if v in e else 0 for v in tv] for e in set(edges) if e]
    return simplex_exact([1] * len(tv), rows, [1] * len(rows)).value


def rho_star(h: Hypergraph, target) -> Fraction:
    target = frozenset(target)
    if not target <= h.vertices:
        raise StructuralError(f"target {sorted(target - h.vertices)} outside the vertex set")
    return _rho_star_cached(tuple(sorted(h.finite_edges, key=bag_key)), target)


def td_width(h: Hypergraph, td: TreeDecomposition) -> Fraction:
    return max(rho_star(h, b) for b in td.bags)


class SetFunctionSpace:
    """Constraint rows for h over nonempty subsets of V, indexed by bitmask - 1."""

    def __init__(self, h: Hypergraph, space: str):
        if space not in SPACES:
            raise StructuralError(f"unknown space {space!r}")
        if len(h.vertices) > MAX_H_VERTICES:
            raise CapacityError(f"{len(h.vertices)} vertices exceed the set-function budget of {MAX_H_VERTICES}")
        self.space = space
        self.verts = sorted(h.vertices)
        self.n = len(self.verts)
        self.bit = {v: 1 << i for i, v in enumerate(self.verts)}
        self.nvars = (1 << self.n) - 1 if space != "modular" else self.n
        finite = [self.mask(e) for e in h.finite_edges]
        rows, rhs = [], []
        for K in sorted(set(finite)):
            rows.append(self.expr({K: 1}))
            rhs.append(1)
        if space == "modular":
            self.rows, self.rhs = rows, rhs
            return
        full = (1 << self.n) - 1
        for X in range(full):
            for i in range(self.n):
                if not X >> i & 1:
                    rows.append(self.expr({X: 1, X | 1 << i: -1}))
                    rhs.append(0)
        if space == "polymatroid":
            for i, j in combinations(range(self.n), 2):
                rest = full & ~(1 << i | 1 << j)
                K = rest
                while True:
                    rows.append(self.expr({K | 1 << i | 1 << j: 1, K: 1, K | 1 << i: -1, K | 1 << j: -1}))
                    rhs.append(0)
                    if K == 0:
                        break
                    K = (K - 1) & rest
        else:
            for X in range(1, full + 1):
                for Y in range(X + 1, full + 1):
                    if X & Y in (X, Y):
                        continue
                    inter = X & Y
                    if not any(inter & ~K == 0 for K in finite):
                        continue
                    rows.append(self.expr({X | Y: 1, inter: 1, X: -1, Y: -1}))
                    rhs.append(0)
        self.rows, self.rhs = rows, rhs

    def mask(self, vs) -> int:
        m = 0
        for v in vs:
            m |= self.bit[v]
        return m

    def expr(self, coeffs: dict) -> dict:
        """Sparse row over LP variables for a linear form in h(S)."""
        row = {}
        for S, a in coeffs.items():
            if S == 0 or a == 0:
                continue
            if self.space == "modular":
                for i in range(self.n):
                    if S >> i & 1:
                        row[i] = row.get(i, 0) + a
            else:
                row[S - 1] = row.get(S - 1, 0) + a
        return {j: a for j, a in row.items() if a != 0}

    def table(self, x) -> dict:
        out = {(): Fraction(0)}
        for S in range(1, 1 << self.n):
            key = tuple(v for i, v in enumerate(self.verts) if S >> i & 1)
            if self.space == "modular":
                out[key] = sum((x[i] for i in range(self.n) if S >> i & 1), Fraction(0))
            else:
                out[key] = x[S - 1]
        return out


@lru_cache(maxsize=256)
def _space(h: Hypergraph, space: str) -> SetFunctionSpace:
    return SetFunctionSpace(h, space)


def max_h_over_bag(h: Hypergraph, bag, space: str = "polymatroid") -> Fraction:
    bag = frozenset(bag)
    if not bag:
        return Fraction(0)
    sp = _space(h, space)
    obj = sp.expr({sp.mask(bag): 1})
    c = [obj.get(j, 0) for j in range(sp.nvars)]
    return maximize(c, sp.rows, sp.rhs).value


def faqw(h: Hypergraph, free_vars=(), relaxed: bool = False) -> WidthReport:
    tds = enumerate_tds(h, free_vars, relaxed)
    if not tds:
        raise InfeasibleError("no tree decomposition in the enumerated family")
    best, best_td = None, None
    for td in tds:
        w = td_width(h, td)
        if best is None or w < best:
            best, best_td = w, td
    return WidthReport("faqw_l" if relaxed else "faqw", best, best_td)


def prune_dominated(tds: list) -> list:
    """Drop decompositions whose every bag-choice is matched by another decomposition.

    A decomposition D2 is dominated by D1 when every bag of D1 sits inside some
    bag of D2; for a monotone h the constraint contributed by D2 is then never
    tighter than the one from D1.
    """
    keep = []
    for i, d2 in enumerate(tds):
        dominated = False
        for j, d1 in enumerate(tds):
            if i == j:
                continue
            if all(any(b1 <= b2 for b2 in d2.bags) for b1 in d1.bags):
                strict = not all(any(b2 <= b1 for b1 in d1.bags) for b2 in d2.bags)
                if strict or j < i:
                    dominated = True
                    break
        if not dominated:
            keep.append(d2)
    return keep


def bag_selections(tds: list, limit: int = MAX_SELECTIONS) -> list:
    """Distinct antichains of bags obtained by picking one bag per decomposition."""
    seen = set()
    out = []
    visits = [0]

    def rec(i, chosen):
        visits[0] += 1
        if visits[0] > limit:
            raise CapacityError(f"more than {limit} bag selections")
        if i == len(tds):
            minimal = frozenset(b for b in chosen if not any(o < b for o in chosen))
            if minimal not in seen:
                seen.add(minimal)
                out.append(minimal)
            return
        bags = tds[i].bags
        if any(any(c <= b for c in chosen) for b in bags):
            rec(i + 1, chosen)
            return
        for b in sorted(bags, key=bag_key):
            rec(i + 1, chosen | {b})

    rec(0, frozenset())
    return sorted(out, key=lambda s: sorted(bag_key(b) for b in s))


def _selection_lp(sp: SetFunctionSpace, chosen):
    z = sp.nvars
    rows = [dict(r) for r in sp.rows]
    rhs = list(sp.rhs)
    for b in sorted(chosen, key=bag_key):
        row = {j: -a for j, a in sp.expr({sp.mask(b): 1}).items()}
        row[z] = 1
        rows.append(row)
        rhs.append(0)
    c = [0] * z + [1]
    res = maximize(c, rows, rhs)
    return res.value, res.x[:z]


def smfw(h: Hypergraph, free_vars=(), relaxed: bool = False, sharp: bool = False) -> WidthReport:
    tds = enumerate_tds(h, free_vars, relaxed)
    if not tds:
        raise InfeasibleError("no tree decomposition in the enumerated family")
    space = "e_polymatroid" if sharp else "polymatroid"
    sp = _space(h, space)
    family = prune_dominated(tds)
    selections = bag_selections(family)
    nthreads = threads()
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            results = list(ex.map(lambda s: _selection_lp(sp, s), selections))
    else:
        results = [_selection_lp(sp, s) for s in selections]
    best_i = max(range(len(results)), key=lambda i: (results[i][0], -i))
    value, x = results[best_i]
    kind = ("sharp_smfw" if sharp else "smfw") + ("_l" if relaxed else "")
    return WidthReport(kind, value, None, sp.table(x),
                       extra={"selections": len(selections), "decompositions": len(family),
                              "witness_bags": [list(bag_key(b)) for b in sorted(selections[best_i], key=bag_key)]})


KIND_ALIASES = {"fhtw": "faqw", "subw": "smfw", "#subw": "sharp_smfw", "sharp_subw": "sharp_smfw"}
KINDS = ("rho_star", "faqw", "faqw_l", "smfw", "smfw_l", "sharp_smfw", "sharp_smfw_l")


def width(h: Hypergraph, kind: str, free_vars=()) -> WidthReport:
    """Dispatch on a WidthReport kind name (fhtw, subw and #subw are accepted aliases)."""
    kind = KIND_ALIASES.get(kind, kind)
    if kind == "faqw":
        return faqw(h, free_vars, False)
    if kind == "faqw_l":
        return faqw(h, free_vars, True)
    table = {"smfw": (False, False), "smfw_l": (True, False),
             "sharp_smfw": (False, True), "sharp_smfw_l": (True, True)}
    if kind in table:
        relaxed, sharp = table[kind]
        return smfw(h, free_vars, relaxed, sharp)
    if kind == "rho_star":
        return WidthReport("rho_star", rho_star(h, h.vertices), search_family_note="")
    raise StructuralError(f"unknown width kind {kind!r}")

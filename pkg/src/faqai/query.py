"""Query objects: factors, unary terms, ligaments, and the JSON query format."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import StructuralError
from .hypergraph import Hypergraph
from .relation import AnnotatedRelation, Database, load_database
from .semiring import Semiring, get_semiring

TERM_KINDS = ("affine", "square", "negsquare", "table")


@dataclass(frozen=True)
class UnaryTerm:
    var: str
    kind: str = "affine"
    a: float = 1.0
    b: float = 0.0
    table: str | None = None

    def __post_init__(self):
        if self.kind not in TERM_KINDS:
            raise StructuralError(f"unknown term kind {self.kind!r}")
        if self.kind == "table" and not self.table:
            raise StructuralError(f"table term on {self.var!r} names no relation")

    def bind(self, db: Database | None):
        """A plain callable value -> float for this term."""
        a, b = float(self.a), float(self.b)
        if self.kind == "affine":
            return lambda x: a * x + b
        if self.kind == "square":
            return lambda x: a * (x + b) ** 2
        if self.kind == "negsquare":
            return lambda x: -a * (x + b) ** 2
        lookup = table_lookup(db, self.table)

        def f(x):
            try:
                return lookup[x]
            except KeyError:
                raise StructuralError(f"table {self.table!r} has no key {x!r}") from None
        return f

    def to_json(self) -> dict:
        expr = {"kind": self.kind}
        if self.kind == "table":
            expr["table"] = self.table
        else:
            expr.update(a=self.a, b=self.b)
        return {"var": self.var, "expr": expr}


def table_lookup(db: Database | None, name: str) -> dict:
    if db is None:
        raise StructuralError(f"table term needs a database holding {name!r}")
    rel = db[name]
    if len(rel.schema) != 2:
        raise StructuralError(f"table {name!r} must be binary, has schema {rel.schema}")
    out = {}
    for k, v in rel.rows:
        if k in out:
            raise StructuralError(f"table {name!r} repeats key {k!r}")
        out[k] = float(v)
    return out


@dataclass(frozen=True)
class Ligament:
    """The indicator of  sum_v theta_v(x_v) <= 0  (``< 0`` when strict)."""

    terms: tuple
    strict: bool = False

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        vs = [t.var for t in self.terms]
        if len(set(vs)) != len(vs):
            raise StructuralError(f"ligament repeats a variable: {vs}")
        if not vs:
            raise StructuralError("ligament without terms")

    @property
    def vars(self) -> frozenset:
        return frozenset(t.var for t in self.terms)

    def bind(self, db: Database | None):
        return [(t.var, t.bind(db)) for t in self.terms]

    def to_json(self) -> dict:
        return {"terms": [t.to_json() for t in self.terms], "strict": self.strict}


def holds(total: float, strict: bool) -> bool:
    return total < 0 if strict else total <= 0


@dataclass(frozen=True)
class Factor:
    vars: tuple
    relation: str
    finite: bool = True

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        if len(set(self.vars)) != len(self.vars):
            raise StructuralError(f"factor {self.relation!r} repeats a variable: {self.vars}")


@dataclass
class FaqAiQuery:
    variables: tuple
    factors: list
    ligaments: list = field(default_factory=list)
    free: tuple = ()
    semiring: Semiring = None

    def __post_init__(self):
        self.variables = tuple(self.variables)
        self.free = tuple(v for v in self.variables if v in set(self.free))
        self.semiring = get_semiring(self.semiring or "count-int")
        if len(set(self.variables)) != len(self.variables):
            raise StructuralError("duplicate query variable")
        self.factors = [f if isinstance(f, Factor) else Factor(*f) for f in self.factors]
        known = set(self.variables)
        for f in self.factors:
            if not set(f.vars) <= known:
                raise StructuralError(f"factor {f.relation!r} uses unknown variables")
        for lg in self.ligaments:
            if not lg.vars <= known:
                raise StructuralError(f"ligament over {sorted(lg.vars)} uses unknown variables")

    def hypergraph(self) -> Hypergraph:
        return Hypergraph(self.variables, [f.vars for f in self.factors],
                          [lg.vars for lg in self.ligaments], [f.finite for f in self.factors])

    def factor_relation(self, db: Database, i: int) -> AnnotatedRelation:
        f = self.factors[i]
        rel = db[f.relation]
        if len(rel.schema) != len(f.vars):
            raise StructuralError(
                f"relation {f.relation!r} has arity {len(rel.schema)}, factor expects {len(f.vars)}")
        return rel.rename(f.vars)

    def relation_names(self) -> set:
        names = {f.relation for f in self.factors}
        for lg in self.ligaments:
            names |= {t.table for t in lg.terms if t.kind == "table"}
        return names

    def to_json(self) -> dict:
        return {"semiring": self.semiring.id, "variables": list(self.variables),
                "factors": [{"vars": list(f.vars), "relation": f.relation, "finite": f.finite}
                            for f in self.factors],
                "free": list(self.free),
                "ligaments": [lg.to_json() for lg in self.ligaments]}


def _term_from_json(d: dict) -> UnaryTerm:
    expr = d.get("expr", {})
    return UnaryTerm(d["var"], expr.get("kind", "affine"), float(expr.get("a", 1.0)),
                     float(expr.get("b", 0.0)), expr.get("table"))


def query_from_json(d: dict) -> FaqAiQuery:
    try:
        factors = [Factor(f.get("vars", f.get("edge")), f["relation"], bool(f.get("finite", True)))
                   for f in d["factors"]]
        ligs = [Ligament(tuple(_term_from_json(t) for t in lg["terms"]), bool(lg.get("strict", False)))
                for lg in d.get("ligaments", [])]
        return FaqAiQuery(d["variables"], factors, ligs, d.get("free", []), d.get("semiring", "count-int"))
    except (KeyError, TypeError) as e:
        raise StructuralError(f"malformed query: {e!r}") from None


def load_query(path) -> FaqAiQuery:
    with open(path, encoding="utf-8") as f:
        return query_from_json(json.load(f))


def load_query_db(query_path, data_dir) -> tuple:
    q = load_query(query_path)
    db = load_database(Path(data_dir), q.semiring, q.relation_names())
    return q, db


def ligament(coeffs: dict, const: float = 0.0, strict: bool = False) -> Ligament:
    """Affine ligament  sum_v coeffs[v] * x_v + const <= 0."""
    vs = list(coeffs)
    terms = [UnaryTerm(v, "affine", float(coeffs[v]), float(const) if i == 0 else 0.0)
             for i, v in enumerate(vs)]
    return Ligament(tuple(terms), strict)

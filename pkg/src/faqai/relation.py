"""Annotated relations and the relational operators the engine composes."""
from __future__ import annotations

import csv
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import StructuralError
from .semiring import Semiring, get_semiring

WEIGHT_COLUMN = "__w"


@dataclass
class Counters:
    """Deterministic operation counts used as complexity witnesses."""

    trie_probes: int = 0
    dominance_queries: int = 0
    index_entries: int = 0
    tuples_materialized: int = 0
    join_emitted: int = 0

    def total(self) -> int:
        return (self.trie_probes + self.dominance_queries + self.index_entries
                + self.tuples_materialized + self.join_emitted)

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["total"] = self.total()
        return d


def _tag(v):
    if isinstance(v, bool):
        return bool
    if isinstance(v, int):
        return int
    if isinstance(v, float):
        return float
    if isinstance(v, str):
        return str
    raise StructuralError(f"unsupported value {v!r}")


class AnnotatedRelation:
    """A finite map from tuples over ``schema`` to nonzero semiring values."""

    __slots__ = ("schema", "rows", "semiring", "_sorted")

    def __init__(self, schema: Sequence[str], rows: Mapping[tuple, object] | Iterable,
                 semiring: Semiring | str, check: bool = False):
        self.schema = tuple(schema)
        if len(set(self.schema)) != len(self.schema):
            raise StructuralError(f"duplicate variable in schema {self.schema}")
        self.semiring = get_semiring(semiring)
        if not isinstance(rows, Mapping):
            rows = {tuple(t): self.semiring.one for t in rows}
        zero = self.semiring.zero
        self.rows = {t: a for t, a in rows.items() if a != zero}
        self._sorted = None
        if check:
            self.validate()

    def validate(self):
        k = len(self.schema)
        tags = [None] * k
        for t, a in self.rows.items():
            if len(t) != k:
                raise StructuralError(f"tuple {t} has arity {len(t)}, schema {self.schema}")
            if not self.semiring.check(a):
                raise StructuralError(f"annotation {a!r} is not a {self.semiring.id} value")
            for i, v in enumerate(t):
                tg = _tag(v)
                if tags[i] is None:
                    tags[i] = tg
                elif tags[i] is not tg:
                    raise StructuralError(
                        f"column {self.schema[i]!r} mixes {tags[i].__name__} and {tg.__name__}")

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.sorted_items())

    def __repr__(self):
        return f"AnnotatedRelation({self.schema}, {len(self.rows)} rows, {self.semiring.id})"

    def sorted_items(self) -> list:
        if self._sorted is None:
            self._sorted = sorted(self.rows.items())
        return self._sorted

    def reorder(self, schema: Sequence[str]) -> "AnnotatedRelation":
        schema = tuple(schema)
        if schema == self.schema:
            return self
        if sorted(schema) != sorted(self.schema):
            raise StructuralError(f"cannot reorder {self.schema} to {schema}")
        pos = [self.schema.index(v) for v in schema]
        return AnnotatedRelation(schema, {tuple(t[i] for i in pos): a for t, a in self.rows.items()},
                                 self.semiring)

    def rename(self, schema: Sequence[str]) -> "AnnotatedRelation":
        """Positional rename of every column."""
        schema = tuple(schema)
        if len(schema) != len(self.schema):
            raise StructuralError(f"cannot bind {self.schema} to {schema}: arity differs")
        return AnnotatedRelation(schema, self.rows, self.semiring)

    def equals(self, other: "AnnotatedRelation", tol: float = 1e-9) -> bool:
        if set(self.schema) != set(other.schema):
            return False
        o = other.reorder(self.schema)
        if self.rows.keys() != o.rows.keys():
            return False
        return all(self.semiring.close(a, o.rows[t], tol) for t, a in self.rows.items())

    def scalar(self):
        """Value of a nullary relation (zero when empty)."""
        if self.schema:
            raise StructuralError("scalar() needs a nullary relation")
        return self.rows.get((), self.semiring.zero)


@dataclass
class Database:
    semiring: Semiring
    relations: dict = field(default_factory=dict)

    def __post_init__(self):
        self.semiring = get_semiring(self.semiring)
        for name, r in self.relations.items():
            if r.semiring is not self.semiring:
                raise StructuralError(f"relation {name!r} uses {r.semiring.id}, db uses {self.semiring.id}")

    def __getitem__(self, name) -> AnnotatedRelation:
        try:
            return self.relations[name]
        except KeyError:
            raise StructuralError(f"unknown relation {name!r}") from None

    def __contains__(self, name):
        return name in self.relations

    def add(self, name, rel: AnnotatedRelation):
        if rel.semiring is not self.semiring:
            raise StructuralError(f"relation {name!r} uses {rel.semiring.id}")
        self.relations[name] = rel

    def size(self) -> int:
        return max((len(r) for r in self.relations.values()), default=0)


def indicator_projection(r: AnnotatedRelation, target_vars) -> AnnotatedRelation:
    target = set(target_vars)
    keep = [i for i, v in enumerate(r.schema) if v in target]
    if not keep:
        raise StructuralError(f"indicator projection of {r.schema} onto {sorted(target)} is empty")
    one = r.semiring.one
    rows = {tuple(t[i] for i in keep): one for t in r.rows}
    return AnnotatedRelation([r.schema[i] for i in keep], rows, r.semiring)


def group_aggregate(r: AnnotatedRelation, keep_vars) -> AnnotatedRelation:
    keep_set = set(keep_vars)
    if not keep_set <= set(r.schema):
        raise StructuralError(f"keep set {sorted(keep_set)} not inside {r.schema}")
    keep = [i for i, v in enumerate(r.schema) if v in keep_set]
    if len(keep) == len(r.schema):
        return r
    add = r.semiring.add
    out = {}
    for t, a in r.rows.items():
        k = tuple(t[i] for i in keep)
        out[k] = add(out[k], a) if k in out else a
    return AnnotatedRelation([r.schema[i] for i in keep], out, r.semiring)


def semijoin_reduce(r: AnnotatedRelation, filter: AnnotatedRelation) -> AnnotatedRelation:
    if not set(filter.schema) <= set(r.schema):
        raise StructuralError(f"filter schema {filter.schema} not inside {r.schema}")
    pos = [r.schema.index(v) for v in filter.schema]
    keys = filter.rows
    rows = {t: a for t, a in r.rows.items() if tuple(t[i] for i in pos) in keys}
    return AnnotatedRelation(r.schema, rows, r.semiring)


def multiway_join(parts: Sequence[AnnotatedRelation], order: Sequence[str] | None = None,
                  counters: Counters | None = None) -> AnnotatedRelation:
    """Join by variable-at-a-time intersection over sorted tries.

    Each part is sorted on its columns in the global variable ``order``; a trie
    level is a run of equal prefixes found by binary search.
    """
    if not parts:
        raise StructuralError("multiway_join needs at least one part")
    sr = parts[0].semiring
    for p in parts:
        if p.semiring is not sr:
            raise StructuralError("multiway_join parts use different semirings")
    if order is None:
        order = []
        for p in parts:
            order.extend(v for v in p.schema if v not in order)
    order = list(order)
    if set(order) != {v for p in parts for v in p.schema}:
        raise StructuralError(f"join order {order} does not match part schemas")
    if counters is None:
        counters = Counters()

    keys, anns, levels = [], [], [[] for _ in order]
    for pi, p in enumerate(parts):
        cols = [v for v in order if v in p.schema]
        pos = [p.schema.index(v) for v in cols]
        items = sorted((tuple(t[i] for i in pos), a) for t, a in p.rows.items())
        if not items:
            return AnnotatedRelation(order, {}, sr)
        keys.append([k for k, _ in items])
        anns.append([a for _, a in items])
        for c, v in enumerate(cols):
            levels[order.index(v)].append((pi, c))

    mul, zero = sr.mul, sr.zero
    out = {}
    depth = len(order)
    nparts = len(parts)
    binding = [None] * depth

    def rec(d, lo, hi):
        if d == depth:
            acc = anns[0][lo[0]]
            for pi in range(1, nparts):
                acc = mul(acc, anns[pi][lo[pi]])
            if acc != zero:
                out[tuple(binding)] = acc
                counters.join_emitted += 1
            return
        parts_here = levels[d]
        lead, lead_col = min(parts_here, key=lambda pc: hi[pc[0]] - lo[pc[0]])
        lk = keys[lead]
        col_key = (lambda c: (lambda t: t[c]))
        lead_key = col_key(lead_col)
        i, end = lo[lead], hi[lead]
        while i < end:
            val = lk[i][lead_col]
            j = bisect_right(lk, val, i, end, key=lead_key)
            counters.trie_probes += 1
            nlo, nhi = list(lo), list(hi)
            nlo[lead], nhi[lead] = i, j
            ok = True
            for pi, c in parts_here:
                if pi == lead:
                    continue
                kf = col_key(c)
                a = bisect_left(keys[pi], val, lo[pi], hi[pi], key=kf)
                counters.trie_probes += 1
                if a == hi[pi] or keys[pi][a][c] != val:
                    ok = False
                    break
                nlo[pi], nhi[pi] = a, bisect_right(keys[pi], val, a, hi[pi], key=kf)
            if ok:
                binding[d] = val
                rec(d + 1, nlo, nhi)
            i = j

    rec(0, [0] * nparts, [len(k) for k in keys])
    return AnnotatedRelation(order, out, sr)


def _parse_value(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def load_relation_csv(path, semiring: Semiring | str) -> AnnotatedRelation:
    """Read a CSV whose header names the variables; ``__w`` holds annotations."""
    sr = get_semiring(semiring)
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise StructuralError(f"{path}: missing header row") from None
        header = [h.strip() for h in header]
        wcol = header.index(WEIGHT_COLUMN) if WEIGHT_COLUMN in header else None
        schema = [h for i, h in enumerate(header) if i != wcol]
        rows = {}
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise StructuralError(f"{path}:{lineno}: expected {len(header)} fields")
            t = tuple(_parse_value(x.strip()) for i, x in enumerate(rec) if i != wcol)
            a = sr.one if wcol is None else sr.coerce(_parse_value(rec[wcol].strip()))
            if t in rows:
                raise StructuralError(f"{path}:{lineno}: duplicate tuple {t}")
            rows[t] = a
    try:
        return AnnotatedRelation(schema, rows, sr, check=True)
    except StructuralError as e:
        raise StructuralError(f"{path}: {e}") from None


def load_database(directory, semiring: Semiring | str, names: Iterable[str] | None = None) -> Database:
    """Load ``<name>.csv`` files from a directory (all of them when ``names`` is None)."""
    directory = Path(directory)
    sr = get_semiring(semiring)
    db = Database(sr)
    if names is None:
        paths = sorted(directory.glob("*.csv"))
    else:
        paths = [directory / f"{n}.csv" for n in sorted(set(names))]
    for p in paths:
        if not p.exists():
            raise StructuralError(f"relation file {p} not found")
        db.add(p.stem, load_relation_csv(p, sr))
    return db

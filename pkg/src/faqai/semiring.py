"""Commutative semirings parameterizing every evaluation path.

Three are provided: ``BOOLEAN`` (or, and), ``COUNT`` (arbitrary precision
integers) and ``REAL`` (64-bit floats, compared with absolute tolerance 1e-9).
"""
from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Any, Callable, Iterable

from .errors import StructuralError

REAL_TOL = 1e-9


@dataclass(frozen=True)
class Semiring:
    id: str
    zero: Any
    one: Any
    add: Callable[[Any, Any], Any]
    mul: Callable[[Any, Any], Any]
    check: Callable[[Any], bool]

    def is_zero(self, v) -> bool:
        return v == self.zero

    def coerce(self, v):
        """Convert a plain Python number into this semiring's value tag."""
        if isinstance(v, str):
            if self.id != "boolean" or v.lower() not in ("true", "false"):
                raise StructuralError(f"annotation {v!r} is not numeric")
            return v.lower() == "true"
        if self.id == "boolean":
            return bool(v)
        if self.id == "count-int":
            if isinstance(v, float):
                if not v.is_integer():
                    raise StructuralError(f"non-integer annotation {v!r} for count-int")
                return int(v)
            return int(v)
        return float(v)

    def close(self, a, b, tol: float = REAL_TOL) -> bool:
        if self.id == "real-sum-prod":
            return abs(a - b) <= tol
        return a == b

    def __repr__(self):
        return f"Semiring({self.id})"


def _is_bool(v):
    return isinstance(v, bool)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_float(v):
    return isinstance(v, float)


BOOLEAN = Semiring("boolean", False, True, operator.or_, operator.and_, _is_bool)
COUNT = Semiring("count-int", 0, 1, operator.add, operator.mul, _is_int)
REAL = Semiring("real-sum-prod", 0.0, 1.0, operator.add, operator.mul, _is_float)

SEMIRINGS = {s.id: s for s in (BOOLEAN, COUNT, REAL)}


def get_semiring(name: str | Semiring) -> Semiring:
    if isinstance(name, Semiring):
        return name
    try:
        return SEMIRINGS[name]
    except KeyError:
        raise StructuralError(f"unknown semiring {name!r}") from None


def _checked(s: Semiring, values: Iterable):
    for v in values:
        if not s.check(v):
            raise StructuralError(f"value {v!r} does not carry the {s.id} tag")
        yield v


def fold_add(s: Semiring, values: Iterable):
    acc = s.zero
    for v in _checked(s, values):
        acc = s.add(acc, v)
    return acc


def fold_mul(s: Semiring, values: Iterable):
    acc = s.one
    for v in _checked(s, values):
        acc = s.mul(acc, v)
    return acc

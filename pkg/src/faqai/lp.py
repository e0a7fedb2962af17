"""Exact linear programming over the rationals.

Problems have the packing form  max c.x  s.t.  A x <= b, x >= 0  with b >= 0,
so the slack basis is feasible and no phase one is needed.

Two routes are provided:

* ``simplex_exact``: a dense tableau simplex over ``Fraction`` with Bland's rule.
* ``maximize``: asks HiGHS for a primal/dual pair, rounds both to nearby
  rationals and accepts them only if they are exactly primal feasible, dual
  feasible and have equal objectives (a complete optimality certificate).
  Otherwise it falls back to ``simplex_exact``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import InfeasibleError, StructuralError

STATS = {"certified": 0, "exact": 0, "fallback": 0}


@dataclass
class LPResult:
    value: Fraction
    x: list
    route: str


class Unbounded(InfeasibleError):
    pass


def _dense(rows, n):
    out = []
    for r in rows:
        if isinstance(r, dict):
            dense = [Fraction(0)] * n
            for j, v in r.items():
                dense[j] = Fraction(v)
            out.append(dense)
        else:
            if len(r) != n:
                raise StructuralError("constraint row length differs from objective length")
            out.append([Fraction(v) for v in r])
    return out


def simplex_exact(c: Sequence, rows: Sequence, b: Sequence) -> LPResult:
    """Dense tableau simplex with Bland's anti-cycling rule."""
    n = len(c)
    A = _dense(rows, n)
    m = len(A)
    bb = [Fraction(v) for v in b]
    if any(v < 0 for v in bb):
        raise StructuralError("simplex_exact needs a nonnegative right-hand side")
    # tableau rows: [A | I | b]; objective row holds reduced costs of the maximization
    T = [A[i] + [Fraction(int(i == k)) for k in range(m)] + [bb[i]] for i in range(m)]
    obj = [-Fraction(v) for v in c] + [Fraction(0)] * m + [Fraction(0)]
    basis = [n + i for i in range(m)]
    width = n + m
    while True:
        col = next((j for j in range(width) if obj[j] < 0), None)
        if col is None:
            break
        best, row = None, None
        for i in range(m):
            a = T[i][col]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[row]):
                    best, row = ratio, i
        if row is None:
            raise Unbounded("linear program is unbounded")
        piv = T[row][col]
        prow = [v / piv for v in T[row]]
        T[row] = prow
        nz = [j for j, v in enumerate(prow) if v != 0]
        for i in range(m):
            f = T[i][col]
            if i != row and f != 0:
                Ti = T[i]
                for j in nz:
                    Ti[j] -= f * prow[j]
        f = obj[col]
        for j in nz:
            obj[j] -= f * prow[j]
        basis[row] = col
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = T[i][-1]
    STATS["exact"] += 1
    return LPResult(obj[-1], x, "exact")


def _rationalize(values, limit):
    fr = [Fraction(float(v)).limit_denominator(limit) for v in values]
    den = lcm(*[f.denominator for f in fr]) if fr else 1
    return [int(f * den) for f in fr], den


def _integer_data(c, rows, b):
    vals = list(c) + list(b) + [v for r in rows for v in (r.values() if isinstance(r, dict) else r)]
    return all(Fraction(v).denominator == 1 for v in vals)


def _certify(c, A, b, x, y):
    for limit in (64, 4096, 10 ** 6):
        X, dx = _rationalize(x, limit)
        Y, dy = _rationalize(y, limit)
        X = np.array(X, dtype=object)
        Y = np.array(Y, dtype=object)
        if (X < 0).any() or (Y < 0).any():
            continue
        if ((A.dot(X)) > b * dx).any():
            continue
        if ((A.T.dot(Y)) < c * dy).any():
            continue
        primal = Fraction(int(c.dot(X)), dx)
        dual = Fraction(int(b.dot(Y)), dy)
        if primal == dual:
            return primal, [Fraction(int(v), dx) for v in X]
    return None


def maximize(c: Sequence, rows: Sequence, b: Sequence) -> LPResult:
    """Exact optimum of a packing LP, certified from a floating-point solve."""
    n = len(c)
    if any(Fraction(v) < 0 for v in b):
        raise StructuralError("maximize needs a nonnegative right-hand side")
    if not rows:
        if any(Fraction(v) > 0 for v in c):
            raise Unbounded("linear program is unbounded")
        return LPResult(Fraction(0), [Fraction(0)] * n, "exact")
    if not _integer_data(c, rows, b):
        return simplex_exact(c, rows, b)
    A = np.zeros((len(rows), n), dtype=np.int64)
    for i, r in enumerate(rows):
        if isinstance(r, dict):
            for j, v in r.items():
                A[i, j] = int(v)
        else:
            A[i, :] = [int(v) for v in r]
    cv = np.array([int(v) for v in c], dtype=np.int64)
    bv = np.array([int(v) for v in b], dtype=np.int64)
    res = linprog(-cv, A_ub=A, b_ub=bv, bounds=(0, None), method="highs-ds")
    if res.status == 3:
        raise Unbounded("linear program is unbounded")
    if res.status == 0:
        cert = _certify(cv.astype(object), A.astype(object), bv.astype(object),
                        res.x, -res.ineqlin.marginals)
        if cert is not None:
            STATS["certified"] += 1
            return LPResult(cert[0], cert[1], "certified")
    STATS["fallback"] += 1
    return simplex_exact(c, rows, b)

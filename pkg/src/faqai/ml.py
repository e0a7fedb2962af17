"""Model training over an unmaterialized feature join.

Every objective and gradient term is a sum over the join of a product of at
most two affine forms in the features and label, restricted by a few affine
inequalities.  Expanding the product gives monomials; each monomial sum is one
engine evaluation where the monomial enters as unary weight factors and the
inequalities as ligaments over all query variables.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .engine import EvalPlan, evaluate, plan
from .errors import DivergenceError, FaqaiError, StructuralError
from .oracle import oracle_eval
from .query import FaqAiQuery, Factor, Ligament, UnaryTerm
from .relation import AnnotatedRelation, Counters, Database, load_database
from .semiring import REAL

LOSSES = ("huber", "hinge", "eps_insensitive", "ordinal_hinge", "scalene")
LOSS_ALIASES = {"eps": "eps_insensitive", "ordinal": "ordinal_hinge"}
INTERCEPT = None  # key of the constant coordinate in an affine form


class DegenerateInitError(FaqaiError):
    """Fewer distinct points than requested clusters."""


@dataclass
class FeatureQuery:
    """A join of finite factors plus the roles its variables play in a model."""

    db: Database
    factors: list
    features: tuple
    label: str | None = None
    intercept: bool = True

    def __post_init__(self):
        self.factors = [f if isinstance(f, Factor) else Factor(*f) for f in self.factors]
        self.features = tuple(self.features)
        if self.db.semiring is not REAL:
            raise StructuralError("feature queries need a database over the real semiring")
        seen = []
        for f in self.factors:
            if not f.finite:
                raise StructuralError(f"factor {f.relation!r} must be finite")
            seen.extend(v for v in f.vars if v not in seen)
        self.variables = tuple(seen)
        roles = list(self.features) + ([self.label] if self.label else [])
        if len(set(roles)) != len(roles):
            raise StructuralError("feature and label variables must be distinct")
        for v in roles:
            if v not in self.variables:
                raise StructuralError(f"variable {v!r} appears in no factor")
        self._domains = {}
        for f in self.factors:
            rel = self.db[f.relation]
            if len(rel.schema) != len(f.vars):
                raise StructuralError(f"relation {f.relation!r} has arity {len(rel.schema)}, "
                                      f"factor expects {len(f.vars)}")
            for i, v in enumerate(f.vars):
                self._domains.setdefault(v, set()).update(t[i] for t in rel.rows)
        for v in roles:
            bad = [x for x in self._domains.get(v, ()) if not isinstance(x, (int, float))]
            if bad:
                raise StructuralError(f"variable {v!r} has non-numeric value {bad[0]!r}")

    @property
    def n(self) -> int:
        return len(self.features) + int(self.intercept)

    def coords(self) -> list:
        """Coordinate keys of a model vector: INTERCEPT first when present."""
        return ([INTERCEPT] if self.intercept else []) + list(self.features)

    def domain(self, v) -> list:
        return sorted(self._domains.get(v, ()))


def load_feature_query(path, data_dir=None) -> FeatureQuery:
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        d = json.load(f)
    try:
        factors = [Factor(f.get("vars", f.get("edge")), f["relation"]) for f in d["factors"]]
        data_dir = Path(data_dir) if data_dir is not None else path.parent / d.get("data", ".")
        db = load_database(data_dir, REAL, {f.relation for f in factors})
        return FeatureQuery(db, factors, d["features"], d.get("label"), bool(d.get("intercept", True)))
    except (KeyError, TypeError) as e:
        raise StructuralError(f"malformed feature query: {e!r}") from None


@dataclass
class ModelParams:
    beta: np.ndarray
    coords: list = field(default_factory=list)
    history: list = field(default_factory=list)

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=np.float64)
        if not np.all(np.isfinite(self.beta)):
            raise DivergenceError("model parameters are not finite")

    def to_json(self) -> dict:
        names = ["(intercept)" if c is INTERCEPT else c for c in self.coords]
        return {"beta": [float(b) for b in self.beta], "coords": names,
                "history": [float(h) for h in self.history]}


@dataclass
class TrainConfig:
    lam: float = 1e-3
    C: float = 1.0
    eps: float = 1e-3
    max_iters: int = 200
    step: float | None = None      # initial step; default 1/(lam*t), or 1 when lam == 0
    armijo: bool = True
    d: int | None = None           # ordinal label count; default max label
    alpha_scalene: float = 0.5
    eps_insensitive: float = 0.1
    seed: int = 0
    init: str = "random"           # "random" (seeded normal, scale 0.1) or "zeros"
    tol: float = 1e-6

    def __post_init__(self):
        if self.lam < 0:
            raise StructuralError("lambda must be >= 0")
        if self.C <= 0:
            raise StructuralError("C must be > 0")
        if self.eps <= 0:
            raise StructuralError("epsilon must be > 0")
        if not 0 < self.alpha_scalene < 1:
            raise StructuralError("scalene alpha must lie in (0, 1)")
        if self.eps_insensitive < 0:
            raise StructuralError("insensitivity width must be >= 0")
        if self.max_iters < 0:
            raise StructuralError("max_iters must be >= 0")
        if self.init not in ("random", "zeros"):
            raise StructuralError(f"unknown init {self.init!r}")

    def to_json(self) -> dict:
        return asdict(self)


# affine forms are dicts {variable or INTERCEPT: coefficient}

def _form(*pairs) -> dict:
    out = {}
    for k, c in pairs:
        if c:
            out[k] = out.get(k, 0.0) + float(c)
    return out


def _scale(f: dict, s: float) -> dict:
    return {k: s * c for k, c in f.items()}


def _plus(f: dict, g: dict) -> dict:
    out = dict(f)
    for k, c in g.items():
        out[k] = out.get(k, 0.0) + c
    return out


class Aggregator:
    """Sums over the join of monomial products, restricted by affine inequalities."""

    def __init__(self, fq: FeatureQuery, counters: Counters | None = None):
        self.fq = fq
        self.counters = counters if counters is not None else Counters()
        self._plans: dict = {}
        self._weights: dict = {}
        self._values: dict = {}
        self.evaluations = 0

    def _weight_relation(self, v, power) -> AnnotatedRelation:
        key = (v, power)
        rel = self._weights.get(key)
        if rel is None:
            rows = {(x,): float(x) ** power for x in self.fq.domain(v)}
            rel = self._weights[key] = AnnotatedRelation((v,), rows, REAL)
        return rel

    def query(self, mono: tuple, conds: tuple, fixed: tuple = ()) -> tuple:
        """Build the engine query for one monomial.

        ``conds`` holds (form, strict) pairs meaning form <= 0 (< 0 when strict);
        ``fixed`` holds (variable, value) pairs restricting a variable to one value.
        """
        fq = self.fq
        V = fq.variables
        rels = {f.relation: fq.db[f.relation] for f in fq.factors}
        factors = list(fq.factors)
        powers = {}
        for v in mono:
            powers[v] = powers.get(v, 0) + 1
        for v in V:
            if v in powers:
                name = f"__pow_{v}_{powers[v]}"
                rels[name] = self._weight_relation(v, powers[v])
                factors.append(Factor((v,), name))
        for v, value in fixed:
            name = f"__eq_{v}"
            rels[name] = AnnotatedRelation((v,), {(value,): 1.0}, REAL)
            factors.append(Factor((v,), name))
        ligs = []
        for form, strict in conds:
            const = form.get(INTERCEPT, 0.0)
            terms = tuple(UnaryTerm(v, "affine", form.get(v, 0.0), const if i == 0 else 0.0)
                          for i, v in enumerate(V))
            ligs.append(Ligament(terms, strict))
        q = FaqAiQuery(V, factors, ligs, (), REAL)
        key = (tuple(sorted(powers)), tuple(v for v, _ in fixed), len(conds))
        return q, Database(REAL, rels), key

    def plan_for(self, q: FaqAiQuery, key) -> EvalPlan:
        p = self._plans.get(key)
        if p is None:
            p = self._plans[key] = plan(q, relaxed=True)
        return p

    def monomial(self, mono: tuple, conds: tuple, fixed: tuple = ()) -> float:
        q, db, key = self.query(mono, conds, fixed)
        self.evaluations += 1
        return float(evaluate(db, q, self.plan_for(q, key), self.counters).scalar())

    def sum_product(self, forms, conds, fixed=()) -> float:
        """Sum over the join of the product of ``forms`` (0, 1 or 2 affine forms)."""
        expanded = {(): 1.0}
        for f in forms:
            nxt = {}
            for mono, c in expanded.items():
                for k, a in f.items():
                    m = mono if k is INTERCEPT else tuple(sorted(mono + (k,)))
                    nxt[m] = nxt.get(m, 0.0) + c * a
            expanded = nxt
        conds = tuple((dict(f), bool(s)) for f, s in conds)
        total = 0.0
        for mono, c in sorted(expanded.items()):
            if c:
                total += c * self.monomial(mono, conds, tuple(fixed))
        return total

    def count(self, conds=(), fixed=()) -> float:
        return self.sum_product((), conds, fixed)

    def values(self, v) -> list:
        """Distinct values variable ``v`` takes in the join."""
        if v not in self._values:
            fq = self.fq
            q = FaqAiQuery(fq.variables, fq.factors, [], (v,), REAL)
            rel = evaluate(fq.db, q, counters=self.counters)
            self._values[v] = [t[0] for t, _ in rel.sorted_items()]
        return self._values[v]


def _prediction(fq: FeatureQuery, beta) -> dict:
    return _form(*zip(fq.coords(), beta))


def _residual(fq: FeatureQuery, beta) -> dict:
    return _plus(_form((fq.label, 1.0)), _scale(_prediction(fq, beta), -1.0))


def _unit(k) -> dict:
    return {k: 1.0}


def _check_labels(agg: Aggregator, loss: str, cfg: TrainConfig) -> list:
    fq = agg.fq
    if fq.label is None:
        raise StructuralError(f"loss {loss!r} needs a label variable")
    labels = agg.values(fq.label)
    if loss == "hinge" and not set(labels) <= {-1, 1}:
        raise StructuralError(f"hinge labels must be -1 or +1, found {sorted(set(labels) - {-1, 1})}")
    if loss == "ordinal_hinge":
        d = cfg.d if cfg.d is not None else int(max(labels, default=1))
        bad = [y for y in labels if y != int(y) or not 1 <= y <= d]
        if bad:
            raise StructuralError(f"ordinal labels must be integers in 1..{d}, found {bad[0]!r}")
    return labels


def canonical_loss(loss: str) -> str:
    loss = LOSS_ALIASES.get(loss, loss)
    if loss not in LOSSES:
        raise StructuralError(f"unknown loss {loss!r}; choose from {', '.join(LOSSES)}")
    return loss


def loss_eval(fq: FeatureQuery, beta, loss: str, cfg: TrainConfig | None = None,
              agg: Aggregator | None = None) -> tuple:
    """Objective and (sub)gradient of the regularized loss, via engine aggregates."""
    cfg = cfg or TrainConfig()
    loss = canonical_loss(loss)
    agg = agg or Aggregator(fq)
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (fq.n,):
        raise StructuralError(f"beta has shape {beta.shape}, model has {fq.n} coordinates")
    if not np.all(np.isfinite(beta)):
        raise DivergenceError("beta is not finite")
    labels = _check_labels(agg, loss, cfg)
    coords = fq.coords()
    S = agg.sum_product
    grad = np.zeros(fq.n)
    obj = 0.0

    if loss == "hinge":
        f = _prediction(fq, beta)
        for y in (1, -1):
            margin = _plus(_scale(f, -y), _form((INTERCEPT, 1.0)))    # 1 - y f
            active = ((_scale(margin, -1.0), False),)                 # y f - 1 <= 0
            fixed = ((fq.label, y),)
            obj += S((margin,), active, fixed)
            for j, k in enumerate(coords):
                grad[j] -= y * S((_unit(k),), active, fixed)
    elif loss == "ordinal_hinge":
        f = _prediction(fq, beta)
        d = cfg.d if cfg.d is not None else int(max(labels, default=1))
        y = fq.label
        for t in range(1, d + 1):
            # t < y and f < 1 + t:  penalty 1 - f + t
            below = ((_form((INTERCEPT, t), (y, -1.0)), True),
                     (_plus(f, _form((INTERCEPT, -1.0 - t))), True))
            pen = _plus(_scale(f, -1.0), _form((INTERCEPT, 1.0 + t)))
            obj += S((pen,), below)
            # t > y and f > t - 1:  penalty 1 + f - t
            above = ((_form((y, 1.0), (INTERCEPT, -t)), True),
                     (_plus(_scale(f, -1.0), _form((INTERCEPT, t - 1.0))), True))
            pen = _plus(f, _form((INTERCEPT, 1.0 - t)))
            obj += S((pen,), above)
            for j, k in enumerate(coords):
                grad[j] += S((_unit(k),), above) - S((_unit(k),), below)
    else:
        r = _residual(fq, beta)
        neg_r = _scale(r, -1.0)
        if loss == "huber":
            inside = ((_plus(r, _form((INTERCEPT, -1.0))), False),
                      (_plus(neg_r, _form((INTERCEPT, -1.0))), False))
            over = ((_plus(neg_r, _form((INTERCEPT, 1.0))), True),)    # r > 1
            under = ((_plus(r, _form((INTERCEPT, 1.0))), True),)       # r < -1
            obj += 0.5 * S((r, r), inside)
            obj += 0.5 * S((_plus(r, _form((INTERCEPT, -1.0))),), over)
            obj += 0.5 * S((_plus(neg_r, _form((INTERCEPT, -1.0))),), under)
            for j, k in enumerate(coords):
                grad[j] += (-S((r, _unit(k)), inside) - 0.5 * S((_unit(k),), over)
                            + 0.5 * S((_unit(k),), under))
        elif loss == "eps_insensitive":
            e = cfg.eps_insensitive
            over = ((_plus(neg_r, _form((INTERCEPT, e))), True),)      # r > e
            under = ((_plus(r, _form((INTERCEPT, e))), True),)         # r < -e
            obj += S((_plus(r, _form((INTERCEPT, -e))),), over)
            obj += S((_plus(neg_r, _form((INTERCEPT, -e))),), under)
            for j, k in enumerate(coords):
                grad[j] += S((_unit(k),), under) - S((_unit(k),), over)
        else:  # scalene
            a = cfg.alpha_scalene
            over = ((neg_r, True),)                                     # r > 0
            under = ((r, True),)                                        # r < 0
            obj += a * S((r,), over) + (1 - a) * S((neg_r,), under)
            for j, k in enumerate(coords):
                grad[j] += (1 - a) * S((_unit(k),), under) - a * S((_unit(k),), over)

    obj += 0.5 * cfg.lam * float(beta @ beta)
    grad += cfg.lam * beta
    if not math.isfinite(obj):
        raise DivergenceError(f"objective is not finite: {obj}")
    return obj, grad


def _initial_beta(fq: FeatureQuery, cfg: TrainConfig) -> np.ndarray:
    if cfg.init == "zeros":
        return np.zeros(fq.n)
    return np.random.default_rng(cfg.seed).normal(scale=0.1, size=fq.n)


def bgd_train(fq: FeatureQuery, loss: str, cfg: TrainConfig | None = None,
              beta0=None) -> ModelParams:
    """Batch (sub)gradient descent with Armijo backtracking.

    ``history`` records the objective before the first step and after each step.
    """
    cfg = cfg or TrainConfig()
    loss = canonical_loss(loss)
    agg = Aggregator(fq)
    beta = _initial_beta(fq, cfg) if beta0 is None else np.asarray(beta0, dtype=np.float64)
    obj, grad = loss_eval(fq, beta, loss, cfg, agg)
    history = [obj]
    for t in range(1, cfg.max_iters + 1):
        gnorm2 = float(grad @ grad)
        if math.sqrt(gnorm2) < cfg.tol:
            break
        if cfg.step is not None:
            alpha = cfg.step
        else:
            alpha = 1.0 / (cfg.lam * t) if cfg.lam > 0 else 1.0
        trial = beta - alpha * grad
        new_obj, new_grad = loss_eval(fq, trial, loss, cfg, agg)
        if cfg.armijo:
            while new_obj > obj - 0.5 * alpha * gnorm2:
                alpha /= 2
                if alpha < 1e-30:
                    return ModelParams(beta, fq.coords(), history)
                trial = beta - alpha * grad
                new_obj, new_grad = loss_eval(fq, trial, loss, cfg, agg)
        beta, obj, grad = trial, new_obj, new_grad
        history.append(obj)
    return ModelParams(beta, fq.coords(), history)


def _project_capped_simplex(v: np.ndarray, budget: float) -> np.ndarray:
    """Euclidean projection onto {a >= 0, sum(a) <= budget}."""
    w = np.maximum(v, 0.0)
    if w.sum() <= budget:
        return w
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - budget
    idx = np.arange(1, len(u) + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    tau = css[rho] / (rho + 1)
    return np.maximum(v - tau, 0.0)


def wolfe_dual_solve(x_vectors, sizes, budget: float, tol: float = 1e-8,
                     max_iters: int = 200_000) -> np.ndarray:
    """Maximize -1/2 |sum a_T x_T|^2 + sum |T| a_T over a >= 0, sum a <= budget.

    Projected gradient ascent with step 1/L (L the largest Gram eigenvalue);
    stops once the residual |a - P(a + grad)| falls below ``tol``.
    """
    X = np.atleast_2d(np.asarray(x_vectors, dtype=np.float64))
    s = np.asarray(sizes, dtype=np.float64)
    m = len(s)
    if m == 0:
        raise StructuralError("the dual needs at least one constraint")
    if budget <= 0:
        return np.zeros(m)
    G = X @ X.T
    L = max(float(np.linalg.eigvalsh(G)[-1]), 1e-12)
    a = np.zeros(m)
    for _ in range(max_iters):
        g = s - G @ a
        if np.linalg.norm(a - _project_capped_simplex(a + g, budget)) < tol:
            break
        a = _project_capped_simplex(a + g / L, budget)
    return a


def dual_objective(x_vectors, sizes, alpha) -> float:
    X = np.atleast_2d(np.asarray(x_vectors, dtype=np.float64))
    v = np.asarray(alpha) @ X
    return -0.5 * float(v @ v) + float(np.asarray(sizes, dtype=np.float64) @ alpha)


@dataclass
class CuttingPlaneResult:
    params: ModelParams
    xi: float
    violation: float
    iterations: int
    working_set: list


def cutting_plane_train(fq: FeatureQuery, cfg: TrainConfig | None = None) -> CuttingPlaneResult:
    """Structural SVM training with a cutting-plane working set.

    Each round finds the most violated constraint T = {y beta.x < 1} by two
    engine aggregates per coordinate (one per label sign), then re-solves the
    small dual over the working set.
    """
    cfg = cfg or TrainConfig()
    agg = Aggregator(fq)
    _check_labels(agg, "hinge", cfg)
    coords = fq.coords()
    size_g = agg.count()
    beta = np.zeros(fq.n)
    xi = 0.0
    W = []
    violation = 0.0
    history = []
    for it in range(cfg.max_iters + 1):
        f = _prediction(fq, beta)
        pos = ((_plus(f, _form((INTERCEPT, -1.0))), True),)             # y = 1,  f < 1
        neg = ((_plus(_scale(f, -1.0), _form((INTERCEPT, -1.0))), True),)  # y = -1, f > -1
        fp, fn = ((fq.label, 1),), ((fq.label, -1),)
        size_t = agg.count(pos, fp) + agg.count(neg, fn)
        x_t = np.array([agg.sum_product((_unit(k),), pos, fp) - agg.sum_product((_unit(k),), neg, fn)
                        for k in coords])
        if size_g == 0:
            break
        violation = (size_t - float(beta @ x_t)) / size_g - xi
        history.append(0.5 * float(beta @ beta) + cfg.C * xi)
        if violation <= cfg.eps or it == cfg.max_iters:
            break
        W.append((x_t, size_t))
        alpha = wolfe_dual_solve([w[0] for w in W], [w[1] for w in W], cfg.C / size_g)
        beta = sum(a * w[0] for a, w in zip(alpha, W))
        beta = np.asarray(beta, dtype=np.float64).reshape(fq.n)
        xi = max(0.0, max((st - float(beta @ xt)) / size_g for xt, st in W))
    return CuttingPlaneResult(ModelParams(beta, coords, history), xi, violation, len(W), W)


@dataclass
class KMeansResult:
    means: np.ndarray
    history: list            # per iteration: {"means": ..., "counts": ...}
    iterations: int
    features: tuple

    def to_json(self) -> dict:
        return {"features": list(self.features), "means": self.means.tolist(),
                "iterations": self.iterations,
                "history": [{"means": np.asarray(h["means"]).tolist(), "counts": list(h["counts"])}
                            for h in self.history]}


def cluster_conditions(means: np.ndarray, i: int, features) -> tuple:
    """Affine conditions selecting the points nearest to mean ``i``.

    c_ij(x) = |x - mu_i|^2 - |x - mu_j|^2 is affine in x.  Ties go to the lowest
    index: strict against j < i, non-strict against j > i.
    """
    conds = []
    mi = means[i]
    for j in range(len(means)):
        if j == i:
            continue
        mj = means[j]
        form = _form(*((v, 2.0 * (mj[l] - mi[l])) for l, v in enumerate(features)),
                     (INTERCEPT, float(mi @ mi - mj @ mj)))
        conds.append((form, j < i))
    return tuple(conds)


def initial_means(fq: FeatureQuery, k: int, seed: int, agg: Aggregator | None = None) -> np.ndarray:
    """k distinct feature points from the join, by seeded reservoir sampling."""
    agg = agg or Aggregator(fq)
    q = FaqAiQuery(fq.variables, fq.factors, [], fq.features, REAL)
    points = [t for t, _ in evaluate(fq.db, q, counters=agg.counters).sorted_items()]
    if k > len(points):
        raise DegenerateInitError(f"k={k} exceeds the {len(points)} distinct points of the join")
    rng = random.Random(seed)
    sample = []
    for idx, p in enumerate(points):
        if idx < k:
            sample.append(p)
        else:
            r = rng.randrange(idx + 1)
            if r < k:
                sample[r] = p
    # map back to feature order (the engine returns free variables in query order)
    order = [q.free.index(v) for v in fq.features]
    return np.array([[float(p[o]) for o in order] for p in sample])


def kmeans_fit(fq: FeatureQuery, k: int, cfg: TrainConfig | None = None, init=None,
               agg: Aggregator | None = None) -> KMeansResult:
    """Lloyd iterations where every count and coordinate sum is an engine aggregate."""
    cfg = cfg or TrainConfig()
    if k < 1:
        raise StructuralError("k must be >= 1")
    feats = fq.features
    agg = agg or Aggregator(fq)
    means = initial_means(fq, k, cfg.seed, agg) if init is None else np.array(init, dtype=np.float64)
    if means.shape != (k, len(feats)):
        raise StructuralError(f"initial means have shape {means.shape}, expected {(k, len(feats))}")
    history = []
    it = 0
    for it in range(1, cfg.max_iters + 1):
        new = means.copy()
        counts = []
        for i in range(k):
            conds = cluster_conditions(means, i, feats)
            cnt = agg.count(conds)
            counts.append(cnt)
            if cnt > 0:
                new[i] = [agg.sum_product((_unit(v),), conds) / cnt for v in feats]
        history.append({"means": new.copy(), "counts": counts})
        moved = float(np.max(np.abs(new - means))) if k else 0.0
        means = new
        if moved < 1e-9:
            break
    return KMeansResult(means, history, it, feats)


# references over the materialized join

def materialize(fq: FeatureQuery) -> list:
    """(assignment dict, multiplicity) for every tuple of the join."""
    q = FaqAiQuery(fq.variables, fq.factors, [], fq.variables, REAL)
    rel = oracle_eval(fq.db, q)
    return [(dict(zip(rel.schema, t)), float(w)) for t, w in rel.sorted_items()]


def _design(fq: FeatureQuery, rows) -> tuple:
    X = np.array([[1.0] * fq.intercept + [float(a[v]) for v in fq.features] for a, _ in rows])
    X = X.reshape(len(rows), fq.n)
    y = np.array([float(a[fq.label]) for a, _ in rows]) if fq.label else None
    w = np.array([m for _, m in rows])
    return X, y, w


def reference_loss(fq: FeatureQuery, beta, loss: str, cfg: TrainConfig | None = None,
                   rows=None) -> float:
    """Regularized objective by a direct loop over the materialized join."""
    cfg = cfg or TrainConfig()
    loss = canonical_loss(loss)
    rows = materialize(fq) if rows is None else rows
    beta = np.asarray(beta, dtype=np.float64)
    total = 0.0
    for a, m in rows:
        x = np.array([1.0] * fq.intercept + [float(a[v]) for v in fq.features])
        f = float(x @ beta)
        y = float(a[fq.label])
        r = y - f
        if loss == "huber":
            val = 0.5 * r * r if abs(r) <= 1 else 0.5 * abs(r) - 0.5
        elif loss == "hinge":
            val = max(0.0, 1 - y * f)
        elif loss == "eps_insensitive":
            val = max(0.0, abs(r) - cfg.eps_insensitive)
        elif loss == "scalene":
            val = cfg.alpha_scalene * max(0.0, r) + (1 - cfg.alpha_scalene) * max(0.0, -r)
        else:
            d = cfg.d if cfg.d is not None else int(max(float(b[fq.label]) for b, _ in rows))
            val = sum(max(0.0, 1 - f + t) for t in range(1, int(y))) + \
                sum(max(0.0, 1 + f - t) for t in range(int(y) + 1, d + 1))
        total += m * val
    return total + 0.5 * cfg.lam * float(beta @ beta)


def reference_lloyd(points: np.ndarray, weights: np.ndarray, init: np.ndarray,
                    max_iters: int = 100) -> list:
    """Weighted Lloyd iterations with ties to the lowest cluster index."""
    means = np.array(init, dtype=np.float64)
    history = []
    for _ in range(max_iters):
        d2 = ((points[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
        assign = np.argmin(d2, axis=1) if len(points) else np.zeros(0, dtype=int)
        new = means.copy()
        counts = []
        for i in range(len(means)):
            sel = assign == i
            cnt = float(weights[sel].sum())
            counts.append(cnt)
            if cnt > 0:
                new[i] = (weights[sel, None] * points[sel]).sum(axis=0) / cnt
        history.append({"means": new.copy(), "counts": counts})
        moved = float(np.max(np.abs(new - means)))
        means = new
        if moved < 1e-9:
            break
    return history


def kmeans_objective(points: np.ndarray, weights: np.ndarray, means: np.ndarray) -> float:
    """Weighted sum of squared distances to the nearest mean."""
    if not len(points):
        return 0.0
    d2 = ((points[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    return float((weights * d2.min(axis=1)).sum())


def materialized_points(fq: FeatureQuery) -> tuple:
    rows = materialize(fq)
    pts = np.array([[float(a[v]) for v in fq.features] for a, _ in rows]).reshape(len(rows), len(fq.features))
    return pts, np.array([m for _, m in rows])

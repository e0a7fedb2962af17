import random

import numpy as np
import pytest

from faqai.errors import StructuralError
from faqai.generators import random_feature_instance
from faqai.ml import (LOSSES, FeatureQuery, TrainConfig, bgd_train, cutting_plane_train,
                      dual_objective, initial_means, kmeans_fit, kmeans_objective, load_feature_query, loss_eval,
                      materialize, materialized_points, reference_lloyd, reference_loss,
                      wolfe_dual_solve)
from faqai.query import Factor
from faqai.relation import AnnotatedRelation, Database
from faqai.semiring import REAL

LABELS = {"huber": "real", "eps_insensitive": "real", "scalene": "real",
          "hinge": "binary", "ordinal_hinge": "ordinal"}


def single_tuple(x, y):
    db = Database(REAL, {"G": AnnotatedRelation(("x", "y"), {(x, y): 1.0}, REAL)})
    return FeatureQuery(db, [Factor(("x", "y"), "G")], ("x",), "y", intercept=False)


def instance(rng, loss, rows=8):
    db, factors, feats, label = random_feature_instance(rng, LABELS[loss], rows=rows)
    return FeatureQuery(db, factors, feats, label)


def separable_join(shift=3):
    """R(id, x1) |x| S(id, x2, y); the label is the side of x1 + x2 = 0."""
    R, S = {}, {}
    for i in range(6):
        sign = 1 if i % 2 == 0 else -1
        R[(i, sign * (shift + i % 3))] = 1.0
        R[(i, sign * (shift + 1))] = 1.0
        S[(i, sign * (shift + i % 2), sign)] = 1.0
    db = Database(REAL, {"R": AnnotatedRelation(("id", "x1"), R, REAL),
                         "S": AnnotatedRelation(("id", "x2", "y"), S, REAL)})
    return FeatureQuery(db, [Factor(("id", "x1"), "R"), Factor(("id", "x2", "y"), "S")],
                        ("x1", "x2"), "y")


def kinks(loss, cfg, f, y, d):
    if loss == "huber":
        return [abs(y - f) - 1]
    if loss == "hinge":
        return [y * f - 1]
    if loss == "eps_insensitive":
        return [abs(y - f) - cfg.eps_insensitive]
    if loss == "scalene":
        return [y - f]
    return [f - 1 - t for t in range(1, int(y))] + [f - t + 1 for t in range(int(y) + 1, d + 1)]


def near_kink(fq, beta, loss, cfg, gap=1e-4):
    rows = materialize(fq)
    d = cfg.d or int(max((a[fq.label] for a, _ in rows), default=1))
    for a, _ in rows:
        x = np.array([1.0] * fq.intercept + [float(a[v]) for v in fq.features])
        if any(abs(k) < gap for k in kinks(loss, cfg, float(x @ beta), float(a[fq.label]), d)):
            return True
    return False


def test_hinge_single_tuple():
    obj, grad = loss_eval(single_tuple(1, 1), np.zeros(1), "hinge", TrainConfig(lam=0))
    assert obj == pytest.approx(1.0) and grad == pytest.approx([-1.0])


def test_huber_single_tuple():
    obj, grad = loss_eval(single_tuple(1, 0.5), np.zeros(1), "huber", TrainConfig(lam=0))
    assert obj == pytest.approx(0.125) and grad == pytest.approx([-0.5])


def test_inactive_indicators_leave_only_regularizer():
    cfg = TrainConfig(lam=0.5)
    beta = np.array([5.0])
    obj, grad = loss_eval(single_tuple(1, 1), beta, "hinge", cfg)
    assert obj == pytest.approx(0.5 * 0.5 * 25) and grad == pytest.approx([2.5])


@pytest.mark.parametrize("loss", LOSSES)
def test_objective_matches_materialized_join(loss):
    rng = random.Random(hash(loss) % 1000)
    cfg = TrainConfig(lam=0.1, d=3)
    for _ in range(8):
        fq = instance(rng, loss)
        beta = np.array([rng.uniform(-1, 1) for _ in range(fq.n)])
        obj, _ = loss_eval(fq, beta, loss, cfg)
        assert obj == pytest.approx(reference_loss(fq, beta, loss, cfg), abs=1e-9, rel=1e-12)


@pytest.mark.parametrize("loss", LOSSES)
def test_gradient_matches_finite_differences(loss):
    rng = random.Random(len(loss))
    cfg = TrainConfig(lam=0.1, d=3)
    checked = 0
    while checked < 10:
        fq = instance(rng, loss)
        beta = np.array([rng.uniform(-1, 1) for _ in range(fq.n)])
        if near_kink(fq, beta, loss, cfg):
            continue
        _, grad = loss_eval(fq, beta, loss, cfg)
        h = 1e-6
        for k in range(fq.n):
            e = np.zeros(fq.n)
            e[k] = h
            fd = (loss_eval(fq, beta + e, loss, cfg)[0] - loss_eval(fq, beta - e, loss, cfg)[0]) / (2 * h)
            assert abs(grad[k] - fd) <= 1e-5 * max(1.0, abs(fd))
        checked += 1


def test_hinge_subgradient_inequality():
    rng = random.Random(50)
    cfg = TrainConfig(lam=0.1)
    fq = instance(rng, "hinge", rows=10)
    for _ in range(50):
        b1 = np.array([rng.uniform(-2, 2) for _ in range(fq.n)])
        b2 = np.array([rng.uniform(-2, 2) for _ in range(fq.n)])
        j1, g1 = loss_eval(fq, b1, "hinge", cfg)
        j2, _ = loss_eval(fq, b2, "hinge", cfg)
        assert j2 >= j1 + g1 @ (b2 - b1) - 1e-9


def test_label_validation():
    with pytest.raises(StructuralError, match="hinge labels"):
        loss_eval(single_tuple(1, 2), np.zeros(1), "hinge")
    with pytest.raises(StructuralError, match="unknown loss"):
        loss_eval(single_tuple(1, 1), np.zeros(1), "logistic")


def test_bgd_descends_and_agrees_with_materialized_objective():
    fq = instance(random.Random(3), "huber", rows=10)
    cfg = TrainConfig(lam=0.1, max_iters=12)
    params = bgd_train(fq, "huber", cfg)
    h = params.history
    assert len(h) > 2
    assert all(b <= a for a, b in zip(h, h[1:]))
    assert h[-1] == pytest.approx(reference_loss(fq, params.beta, "huber", cfg), abs=1e-6)


def test_bgd_on_empty_join_shrinks_towards_zero():
    db = Database(REAL, {"G": AnnotatedRelation(("x", "y"), {}, REAL)})
    fq = FeatureQuery(db, [Factor(("x", "y"), "G")], ("x",), "y")
    beta0 = np.array([1.0, -2.0])
    params = bgd_train(fq, "huber", TrainConfig(lam=0.5, max_iters=20), beta0)
    assert np.linalg.norm(params.beta) < 1e-6


def test_wolfe_dual_examples():
    assert wolfe_dual_solve([[1.0]], [1], 10) == pytest.approx([1.0])
    assert wolfe_dual_solve([[1.0]], [1], 0) == pytest.approx([0.0])
    twin = wolfe_dual_solve([[1.0, 2.0], [1.0, 2.0]], [3, 3], 10)
    one = wolfe_dual_solve([[1.0, 2.0]], [3], 10)
    assert dual_objective([[1.0, 2.0]] * 2, [3, 3], twin) == pytest.approx(
        dual_objective([[1.0, 2.0]], [3], one), abs=1e-9)


def test_cutting_plane_separates():
    fq = separable_join()
    cfg = TrainConfig(C=10.0, eps=1e-4)
    res = cutting_plane_train(fq, cfg)
    assert res.violation <= cfg.eps
    for a, _ in materialize(fq):
        x = np.array([1.0, a["x1"], a["x2"]])
        assert a["y"] * (res.params.beta @ x) > 0


def test_cutting_plane_single_class():
    fq = separable_join()
    rows = {t[:2] + (1,): w for t, w in fq.db["S"].rows.items()}
    fq.db.add("S", AnnotatedRelation(("id", "x2", "y"), rows, REAL))
    res = cutting_plane_train(fq, TrainConfig(C=10.0, eps=1e-4))
    for a, _ in materialize(fq):
        assert res.params.beta @ np.array([1.0, a["x1"], a["x2"]]) > 0


def test_cutting_plane_is_no_worse_than_subgradient_descent():
    fq = instance(random.Random(12), "hinge", rows=10)
    C, eps = 2.0, 1e-4
    size = len(materialize(fq))
    n_rows = sum(m for _, m in materialize(fq))
    lam = n_rows / C                        # same optimum as the max-margin primal
    cp = cutting_plane_train(fq, TrainConfig(C=C, eps=eps))
    gd = bgd_train(fq, "hinge", TrainConfig(lam=lam, max_iters=40))
    scale = C / n_rows
    primal = lambda b: scale * reference_loss(fq, b, "hinge", TrainConfig(lam=lam))  # noqa: E731
    assert size > 0
    assert primal(cp.params.beta) <= primal(gd.beta) + eps * C + 1e-9


def test_kmeans_fixpoint_and_single_cluster():
    db = Database(REAL, {"P": AnnotatedRelation(("x",), {(0,): 1.0, (10,): 1.0}, REAL)})
    fq = FeatureQuery(db, [Factor(("x",), "P")], ("x",))
    res = kmeans_fit(fq, 2, init=[[0.0], [10.0]])
    assert res.iterations == 1 and res.means.tolist() == [[0.0], [10.0]]
    res = kmeans_fit(fq, 1, init=[[3.0]])
    assert res.means.tolist() == [[5.0]]


def test_kmeans_follows_reference_lloyd():
    rng = random.Random(8)
    for trial in range(10):
        db, factors, feats, _ = random_feature_instance(rng, "none", rows=rng.randint(4, 10))
        fq = FeatureQuery(db, factors, feats)
        pts, w = materialized_points(fq)
        if len({tuple(p) for p in pts}) < 2:
            continue
        cfg = TrainConfig(seed=trial, max_iters=50)
        res = kmeans_fit(fq, 2, cfg)
        ref = reference_lloyd(pts, w, initial_means(fq, 2, cfg.seed))
        assert len(ref) == len(res.history)
        for mine, theirs in zip(res.history, ref):
            assert np.allclose(mine["means"], theirs["means"], atol=1e-9)
            assert mine["counts"] == pytest.approx(theirs["counts"])
        objs = [kmeans_objective(pts, w, h["means"]) for h in res.history]
        assert all(b <= a + 1e-9 for a, b in zip(objs, objs[1:]))


def test_kmeans_ties_go_to_lowest_index():
    db = Database(REAL, {"P": AnnotatedRelation(("x",), {(0,): 1.0, (5,): 1.0, (10,): 1.0}, REAL)})
    fq = FeatureQuery(db, [Factor(("x",), "P")], ("x",))
    res = kmeans_fit(fq, 2, TrainConfig(max_iters=1), init=[[0.0], [10.0]])
    assert res.history[0]["counts"] == [2.0, 1.0]


def test_shipped_feature_query_loads(examples_dir):
    fq = load_feature_query(examples_dir / "ml" / "regression.json")
    assert fq.coords()[1:] == ["units", "size"] and fq.label == "y"

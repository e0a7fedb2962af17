import random

import pytest

from conftest import path_ad_query
from faqai.engine import evaluate, plan
from faqai.errors import StructuralError
from faqai.generators import cycle_instance, path_instance
from faqai.heavylight import count_4cycle, count_path_ineq, cycle_splits, degree_split
from faqai.hypergraph import TreeDecomposition
from faqai.query import ligament
from faqai.relation import AnnotatedRelation, Counters, Database
from faqai.semiring import COUNT

CYCLE = ("R12", "R23", "R34", "R41")


def cycle_oracle(db):
    r12, r23, r34, r41 = (db[n].rows for n in CYCLE)
    total = 0
    for (x1, x2), a in r12.items():
        for (y2, x3), b in r23.items():
            if y2 != x2:
                continue
            for (y3, x4), c in r34.items():
                if y3 != x3:
                    continue
                d = r41.get((x4, x1))
                if d:
                    total += a * b * c * d
    return total


def cycle_tuples(db):
    r12, r23, r34, r41 = (db[n].rows for n in CYCLE)
    for (x1, x2) in r12:
        for (y2, x3) in r23:
            for (y3, x4) in r34:
                if y2 == x2 and y3 == x3 and (x4, x1) in r41:
                    yield x1, x2, x3, x4


def path_oracle(db, lig):
    terms = lig.bind(db)
    total = 0
    for (a, b), w1 in db["R"].rows.items():
        for (b2, c), w2 in db["S"].rows.items():
            if b2 != b:
                continue
            for (c2, d), w3 in db["T"].rows.items():
                if c2 != c:
                    continue
                env = {"a": a, "b": b, "c": c, "d": d}
                s = sum(f(env[v]) for v, f in terms)
                if s < 0 or (s == 0 and not lig.strict):
                    total += w1 * w2 * w3
    return total


def random_ligament(rng):
    vs = rng.sample("abcd", rng.randint(1, 4))
    return ligament({v: rng.randint(-2, 2) for v in vs}, rng.randint(-3, 3), rng.random() < 0.5)


def test_degree_split_examples():
    R = AnnotatedRelation("ab", {(1, 1): 1, (1, 2): 1, (2, 1): 1}, COUNT)
    s = degree_split(R, ("a",), 1)
    assert set(s.light.rows) == {(2, 1)}
    assert set(s.heavy.rows) == {(1, 1), (1, 2)}
    assert len(degree_split(R, ("a",), 3).heavy) == 0
    assert len(degree_split(R, ("a",), 0).light) == 0
    with pytest.raises(StructuralError):
        degree_split(R, ("z",), 1)


def test_single_cycle_and_empty_relation():
    one = AnnotatedRelation("xy", {(0, 0): 1}, COUNT)
    db = Database(COUNT, {n: one for n in CYCLE})
    assert count_4cycle(db) == 1
    db.add("R34", AnnotatedRelation("xy", {}, COUNT))
    assert count_4cycle(db) == 0


@pytest.mark.parametrize("adversarial", [False, True])
def test_cycle_matches_nested_loops(adversarial):
    rng = random.Random(31 + adversarial)
    for _ in range(40):
        db = cycle_instance(rng, rng.randint(1, 30), adversarial)
        assert count_4cycle(db) == cycle_oracle(db)


def test_cycle_branches_are_disjoint():
    rng = random.Random(5)
    for _ in range(20):
        db = cycle_instance(rng, rng.randint(5, 30))
        sp = cycle_splits(*(db[n] for n in CYCLE))
        for t in cycle_tuples(db):
            assert sum(sp.branches(*t)) == 1, t


def test_path_examples():
    rng = random.Random(2)
    db = path_instance(rng, 20)
    always = ligament({"a": 0})
    assert count_path_ineq(db, always).value == path_oracle(db, always)
    db.add("S", AnnotatedRelation("xy", {}, COUNT))
    assert count_path_ineq(db, ligament({"a": 1, "d": -1})).value == 0


@pytest.mark.parametrize("adversarial", [False, True])
def test_path_matches_nested_loops(adversarial):
    rng = random.Random(17 + adversarial)
    for _ in range(40):
        db = path_instance(rng, rng.randint(1, 30), adversarial)
        lig = random_ligament(rng)
        res = count_path_ineq(db, lig)
        assert res.value == path_oracle(db, lig)
        assert res.u_size <= res.n ** 1.5 and res.w_size <= res.n ** 1.5


def test_path_rejects_foreign_ligament():
    db = path_instance(random.Random(0), 5)
    with pytest.raises(StructuralError):
        count_path_ineq(db, ligament({"z": 1}))


def test_degree_partitioning_beats_single_decomposition_growth():
    lig = ligament({"a": 1, "d": -1})
    q = path_ad_query()
    single = [plan(q, td=TreeDecomposition([set("ab"), set("bcd")], [(0, 1)])),
              plan(q, td=TreeDecomposition([set("abc"), set("cd")], [(0, 1)]))]
    split, whole = [], [[] for _ in single]
    for e in (9, 10, 11):
        db = path_instance(random.Random(e), 2 ** e, True)
        c = Counters()
        count_path_ineq(db, lig, counters=c)
        split.append(c.total())
        for p, acc in zip(single, whole):
            c = Counters()
            evaluate(db, q, p, c)
            acc.append(c.total())
    assert all(b / a <= 2 ** 1.6 for a, b in zip(split, split[1:]))
    for acc in whole:
        assert all(b / a >= 2 ** 1.9 for a, b in zip(acc, acc[1:]))

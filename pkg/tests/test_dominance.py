import random
from itertools import product

import pytest

from faqai.dominance import LE, LT, build, query, scan
from faqai.errors import StructuralError
from faqai.relation import Counters
from faqai.semiring import COUNT, REAL


def test_empty_index_answers_zero():
    idx = build([], 2)
    assert query(idx, (0, 0)) == 0


def test_single_point():
    idx = build([((2.0,), 7)], 1)
    assert query(idx, (1,)) == 7
    assert query(idx, (2,)) == 7
    assert query(idx, (3,)) == 0
    assert query(build([((2.0,), 7)], 1, (LT,)), (2,)) == 0


def test_examples():
    idx = build([((1,), 1), ((3,), 2), ((5,), 4)], 1)
    assert query(idx, (2,)) == 6
    idx = build([((1, 1), 1), ((2, 0), 1)], 2)
    assert query(idx, (1, 1)) == 1
    assert query(idx, (9, 9)) == 0


def test_total_weight_preserved():
    rng = random.Random(0)
    pts = [((rng.random(), rng.random()), rng.randint(1, 5)) for _ in range(1000)]
    idx = build(pts, 2)
    assert idx.total() == sum(w for _, w in pts)
    assert query(idx, (-1, -1)) == idx.total()


def test_counters_track_entries_and_queries():
    c = Counters()
    idx = build([((1, 2), 1), ((3, 4), 1)], 2, counters=c)
    query(idx, (0, 0))
    assert c.index_entries > 0 and c.dominance_queries == 1


def test_bad_inputs():
    with pytest.raises(StructuralError):
        build([((1, 2), 1)], 1)
    with pytest.raises(StructuralError):
        build([((float("inf"),), 1)], 1)
    with pytest.raises(StructuralError):
        query(build([], 2), (1,))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_real_weights_match_scan(k):
    rng = random.Random(k)
    for strict in product((LE, LT), repeat=k):
        pts = [(tuple(rng.randint(0, 4) for _ in range(k)), rng.uniform(0.1, 2)) for _ in range(25)]
        idx = build(pts, k, strict, REAL)
        for _ in range(40):
            q = tuple(rng.randint(-1, 5) for _ in range(k))
            assert abs(query(idx, q) - scan(pts, q, strict, REAL)) <= 1e-9


def test_count_monotone_in_query_point():
    rng = random.Random(8)
    pts = [(tuple(rng.randint(0, 6) for _ in range(2)), 1) for _ in range(40)]
    idx = build(pts, 2, (LE, LT), COUNT)
    for _ in range(200):
        q = tuple(rng.randint(0, 6) for _ in range(2))
        q2 = tuple(x + rng.randint(0, 2) for x in q)
        assert query(idx, q) >= query(idx, q2)

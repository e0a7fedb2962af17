import random
from fractions import Fraction

import pytest

from faqai.generators import random_hypergraph
from faqai.hypergraph import Hypergraph
from faqai.widths import KINDS, faqw, fraction_str, max_h_over_bag, rho_star, smfw, width

ORDERED_PATH = Hypergraph("abcd", ["ab", "bc", "cd"], ["ac", "bc", "bd"])
PATH_AD = Hypergraph("abcd", ["ab", "bc", "cd"], ["ad"])
CYCLE4 = Hypergraph(["x1", "x2", "x3", "x4"], [("x1", "x2"), ("x2", "x3"), ("x3", "x4"), ("x4", "x1")])
KSUM4 = Hypergraph(["x1", "x2", "x3", "x4"], [("x1",), ("x2",), ("x3",), ("x4",)],
                   [("x1", "x2", "x3", "x4")])


def test_rho_star():
    tri = Hypergraph("abc", ["ab", "bc", "ac"])
    assert rho_star(tri, "abc") == Fraction(3, 2)
    assert rho_star(tri, "ab") == 1
    assert rho_star(tri, "") == 0


def test_max_h_over_bag():
    tri = Hypergraph("abc", ["ab", "bc", "ac"])
    assert max_h_over_bag(tri, "abc") == Fraction(3, 2)
    assert max_h_over_bag(tri, "") == 0
    assert max_h_over_bag(Hypergraph("ab", ["ab"]), "ab") == 1


def test_fraction_strings():
    assert fraction_str(Fraction(3, 2)) == "3/2"
    assert fraction_str(Fraction(4, 2)) == "2"


def test_named_width_pins():
    assert faqw(ORDERED_PATH).value == 2
    assert faqw(ORDERED_PATH, relaxed=True).value == 1
    assert faqw(PATH_AD).value == 2
    assert faqw(PATH_AD, relaxed=True).value == 2
    assert smfw(PATH_AD, relaxed=True).value == Fraction(3, 2)
    assert width(CYCLE4, "fhtw").value == 2
    assert width(CYCLE4, "#subw").value == Fraction(3, 2)
    assert width(KSUM4, "faqw_l").value == 2


def test_single_edge_everything_is_one():
    h = Hypergraph("abc", ["abc"])
    for kind in KINDS:
        if kind != "rho_star":
            assert width(h, kind).value == 1, kind


def test_report_json_carries_witness():
    rep = width(ORDERED_PATH, "faqw_l").to_json()
    assert rep["kind"] == "faqw_l" and rep["value"] == "1"
    assert sorted(map(tuple, rep["witness_td"]["bags"])) == [("a", "b"), ("b", "c"), ("c", "d")]


def test_unknown_kind():
    with pytest.raises(Exception):
        width(ORDERED_PATH, "treewidth")


def test_width_orders_on_random_hypergraphs():
    rng = random.Random(21)
    for _ in range(30):
        h = random_hypergraph(rng)
        w = {k: width(h, k).value for k in ("faqw", "faqw_l", "smfw", "smfw_l", "sharp_smfw")}
        assert w["smfw"] <= w["sharp_smfw"] <= w["faqw"]
        assert w["smfw_l"] <= w["faqw_l"] <= w["faqw"]
        assert w["faqw"] <= 2 * w["faqw_l"]


def test_set_function_space_inclusions():
    rng = random.Random(4)
    for _ in range(20):
        h = random_hypergraph(rng, max_vertices=4)
        verts = sorted(h.vertices)
        bag = rng.sample(verts, rng.randint(1, len(verts)))
        poly = max_h_over_bag(h, bag, "polymatroid")
        assert poly == rho_star(h, bag)
        assert max_h_over_bag(h, bag, "modular") <= max_h_over_bag(h, bag, "e_polymatroid")
        assert poly <= max_h_over_bag(h, bag, "e_polymatroid")

from pathlib import Path

import pytest

from faqai.query import FaqAiQuery, Factor, ligament

EXAMPLES = Path(__file__).resolve().parent.parent / "examples" / "faqai"


def ordered_path_query(semiring="count-int", free=()):
    """Path R(a,b) S(b,c) T(c,d) with a<=c, c<=b, d<=b."""
    return FaqAiQuery("abcd", [Factor("ab", "R"), Factor("bc", "S"), Factor("cd", "T")],
                      [ligament({"a": 1, "c": -1}), ligament({"c": 1, "b": -1}),
                       ligament({"d": 1, "b": -1})], free, semiring)


def path_ad_query(semiring="count-int", free=()):
    """Path R(a,b) S(b,c) T(c,d) with a<=d."""
    return FaqAiQuery("abcd", [Factor("ab", "R"), Factor("bc", "S"), Factor("cd", "T")],
                      [ligament({"a": 1, "d": -1})], free, semiring)


@pytest.fixture
def examples_dir():
    return EXAMPLES

import pytest

from colloquy import terms as T
from colloquy.syntax import ParseError, canonical, canonical_renamed, parse
from tests.conftest import random_formula

SAMPLES = [
    "(pgoal u1 (done (action u1 (go_to (agent u1) (destination X#place)) true) Loc Time) Q 0.9)",
    "(knowref sys (^ A#years (age_of u1 A#years)))",
    "(bel u1 (and (p a) (not (q b 45#years))))",
    "(knowif u1 (exists C#business (nearby_to C u1)))",
    "(intend sys ((action sys (mk (agent sys) (date D#date)) true) nil 3) true 0.81)",
    "(done (action u1 (seq (a (agent u1)) (condit (p x) (b (agent u1)))) true) nil 4)",
    "(done (action u1 (disj (a (agent u1)) (b (agent u1))) true) nil 4)",
    "(failed (action sys (mk (agent sys)) true) no_slots)",
    "(impossible (action sys (mk (agent sys)) true))",
    "(before (p a) (q b))",
    "(eventually (p a))",
    "(always (p a))",
    "(default (knowref u1 (^ V (pgoal u1 P Q))))",
    "(blocked (intend u1 ((action u1 (mv (agent u1)) true) L Tm)))",
    "(equal X cvs)",
    "(goal u1 (p a))",
    "(doing (action sys (mk (agent sys)) true) nil 2)",
    "(p (list x y z) \"quoted text\")",
    "(r 3/4 9am monday 10:30pm)",
]


@pytest.mark.parametrize("text", SAMPLES)
def test_round_trip_exact(text):
    f = parse(text)
    printed = canonical(f)
    assert canonical(parse(printed)) == printed


def test_round_trip_random(rng, formula_vocab):
    for _ in range(500):
        f = random_formula(rng, 4, formula_vocab)
        printed = canonical(f)
        assert canonical(parse(printed)) == printed


def test_time_terms():
    f = parse("(at 9am monday)")
    assert f.args[0] == T.TimeTerm("clock", "9am")
    assert f.args[1] == T.TimeTerm("date", "monday")
    assert T.TimeTerm("clock", "9am").sort_key < T.TimeTerm("clock", "11am").sort_key


def test_numbers_are_exact_rationals():
    f = parse("(q 0.1 1/3)")
    from fractions import Fraction
    assert f.args[0].value == Fraction(1, 10)
    assert f.args[1].value == Fraction(1, 3)


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as e:
        parse("(p (q a)")
    assert e.value.line is not None

    with pytest.raises(ParseError):
        parse("(^ no binder here)")


def test_canonical_renamed_alpha_and_meta_insensitive():
    a = parse("(pgoal u1 (p X Y) (q Z) 0.9)")
    b = parse("(pgoal u1 (p U W) (other rel) 0.4)")
    assert canonical_renamed(a) == canonical_renamed(b)
    c = parse("(pgoal u1 (p X X))")
    assert canonical_renamed(a) != canonical_renamed(c)

import random

import pytest

from colloquy import terms as T
from colloquy.domain import load_pack
from colloquy.ontology import base_ontology


@pytest.fixture(scope="session")
def pack():
    return load_pack()


@pytest.fixture()
def ontology():
    ont = base_ontology()
    ont.add_instance("u1", "person")
    ont.add_instance("sys", "agent")
    ont.add_instance("a", "place")
    return ont


def random_term(rng, depth, vocab):
    roll = rng.random()
    if depth <= 0 or roll < 0.35:
        return rng.choice(vocab["atoms"])
    if roll < 0.6:
        return rng.choice(vocab["vars"])
    if roll < 0.75:
        return T.Num(rng.choice(vocab["numbers"]), rng.choice([None, "years"]))
    return T.Compound(rng.choice(vocab["functors"]),
                      tuple((None, random_term(rng, depth - 1, vocab))
                            for _ in range(rng.randint(1, 2))))


def random_formula(rng, depth, vocab):
    """Well-formed formula generator over a small vocabulary."""
    roll = rng.random()
    if depth <= 0 or roll < 0.3:
        return T.Pred(rng.choice(vocab["preds"]),
                      tuple(random_term(rng, depth - 1, vocab)
                            for _ in range(rng.randint(1, 2))))
    agent = rng.choice(vocab["agents"])
    pick = rng.randint(0, 9)
    if pick == 0:
        return T.Not(T.Pred(rng.choice(vocab["preds"]),
                            (random_term(rng, 0, vocab),)))
    if pick == 1:
        return T.conj([random_formula(rng, depth - 1, vocab) for _ in range(2)])
    if pick == 2:
        return T.disj([random_formula(rng, depth - 1, vocab) for _ in range(2)])
    if pick == 3:
        v = rng.choice(vocab["vars"])
        body = T.Pred(rng.choice(vocab["preds"]), (v, random_term(rng, 0, vocab)))
        return T.Exists(v, body)
    if pick == 4:
        return T.Bel(agent, random_formula(rng, depth - 1, vocab))
    if pick == 5:
        return T.PGoal(agent, random_formula(rng, depth - 1, vocab))
    if pick == 6:
        return T.KnowIf(agent, random_formula(rng, depth - 1, vocab))
    if pick == 7:
        v = rng.choice(vocab["vars"])
        body = T.Pred(rng.choice(vocab["preds"]), (v, random_term(rng, 0, vocab)))
        return T.KnowRef(agent, v, body)
    if pick == 8:
        occ = T.Occurrence(
            T.ActionRef(agent, T.PrimAct(rng.choice(vocab["acts"]),
                                         (("agent", agent),)), T.TRUE),
            T.Atom("nil"), T.Num(rng.choice(vocab["numbers"])))
        return T.Intend(agent, occ)
    return T.Bel(agent, T.Bel(agent, random_formula(rng, depth - 1, vocab)))


@pytest.fixture()
def formula_vocab():
    from fractions import Fraction
    return {
        "atoms": [T.Atom(x) for x in ("a", "b", "c")],
        "vars": [T.Var(x) for x in ("X", "Y", "Z")],
        "numbers": [Fraction(n) for n in (1, 2, 45)],
        "functors": ["f", "g"],
        "preds": ["p", "q", "r"],
        "agents": [T.Atom("u1"), T.Atom("sys"), T.Atom("x2")],
        "acts": ["mv", "tk"],
    }


@pytest.fixture()
def rng():
    return random.Random(20240817)

import random

from colloquy import terms as T
from colloquy.equalities import EquivalenceStore


def V(n):
    return T.Var(n)


def test_merge_chain_resolves_to_constant():
    # the center wanted for going and the center wanted for the shot turn
    # out to be the same place, later identified outright
    store = EquivalenceStore()
    store.merge(V("CenterToGoTo"), V("CenterForShot"))
    store.merge(V("CenterForShot"), T.Atom("cvs"))
    assert store.resolve(V("CenterToGoTo")) == T.Atom("cvs")
    assert store.resolve(V("CenterForShot")) == T.Atom("cvs")


def test_self_merge_noop():
    store = EquivalenceStore()
    r = store.merge(V("X"), V("X"))
    assert r.merged is False and r.reason == "noop"


def test_two_constants_is_inconsistency():
    store = EquivalenceStore()
    store.merge(V("X"), T.Atom("cvs"))
    r = store.merge(V("X"), T.Atom("walgreens"))
    assert r.merged is False and r.reason == "inconsistent"
    assert ("inconsistent", "cvs", "walgreens") in store.events


def test_scope_guard_blocks_cross_modal_merge():
    # a variable bound inside another agent's belief cannot be identified
    # with a planner-level constant
    store = EquivalenceStore()
    store.register(V("MorningStar"), scope=("john",))
    r = store.merge(V("MorningStar"), T.Atom("venus"))
    assert r.merged is False and r.reason == "scope"
    # same-scope variables merge fine
    store.register(V("EveningStar"), scope=("john",))
    assert store.merge(V("MorningStar"), V("EveningStar"), scope=("john",)).merged


def test_random_merges_match_naive_closure():
    rng = random.Random(7)
    names = [f"V{i}" for i in range(12)] + ["c1", "c2"]

    def is_const(n):
        return n.startswith("c")

    for trial in range(30):
        store = EquivalenceStore()
        pairs = []
        import itertools
        for _ in range(50):
            a, b = rng.sample(names, 2)
            ta = T.Atom(a) if is_const(a) else V(a)
            tb = T.Atom(b) if is_const(b) else V(b)
            before_sets = _closure_sets(pairs)
            joins_two_constants = any(
                is_const(x) for x in _set_of(before_sets, a) if x != a
            ) and any(is_const(x) for x in _set_of(before_sets, b) if x != b)
            r = store.merge(ta, tb)
            if r.merged:
                pairs.append((a, b))
        closure = _closure_sets(pairs)
        for group in closure:
            consts = sorted(x for x in group if is_const(x))
            for member in group:
                t = T.Atom(member) if is_const(member) else V(member)
                resolved = store.resolve(t)
                if consts:
                    assert resolved == T.Atom(consts[0]) or isinstance(resolved, T.Var) is False
                others = [T.Atom(x) if is_const(x) else V(x) for x in group]
                for o in others:
                    assert store.same_class(t, o)


def _closure_sets(pairs):
    sets = []
    for a, b in pairs:
        sa = next((s for s in sets if a in s), None)
        sb = next((s for s in sets if b in s), None)
        if sa is None and sb is None:
            sets.append({a, b})
        elif sa is None:
            sb.add(a)
        elif sb is None:
            sa.add(b)
        elif sa is not sb:
            sa |= sb
            sets.remove(sb)
    return sets


def _set_of(sets, x):
    return next((s for s in sets if x in s), {x})


def test_resolve_term_keeps_binders():
    store = EquivalenceStore()
    store.merge(V("C"), T.Atom("cvs"))
    f = T.KnowRef(T.Atom("u1"), V("C"), T.Pred("nearby", (V("C"),)))
    out = store.resolve_term(f)
    assert isinstance(out.var, T.Var)
    assert out.body.args[0] == T.Atom("cvs")

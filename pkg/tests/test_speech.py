from fractions import Fraction

import pytest

from colloquy import terms as T
from colloquy.actions import ActionRegistry, RegistryError
from colloquy.context import DialogueContext, DoneAct
from colloquy.ontology import base_ontology
from colloquy.speech import (
    ConstraintLF, DontKnowLF, IdentifiedAct, PolarLF, SpeechActInstance,
    UnresolvedAnswer, ValueLF, WhyLF, identify_user_speech_act,
    register_speech_acts,
)
from colloquy.syntax import canonical, parse
from colloquy.unify import unify

SYS, U1 = T.Atom("sys"), T.Atom("u1")


@pytest.fixture()
def registry(ontology):
    reg = ActionRegistry(ontology)
    register_speech_acts(reg)
    return reg


class TestRegistration:
    def test_whq_effect_is_speaker_knowref(self, registry):
        inst = T.PrimAct("whq", (("agent", SYS), ("listener", U1),
                                 ("descr", T.Descr(T.Var("V"), parse("(age_of u1 V)")))))
        eff = registry.effect(inst)
        assert isinstance(eff, T.KnowRef) and eff.agent == SYS

    def test_assert_effect_is_nested_belief(self, registry):
        inst = T.PrimAct("assert", (("agent", SYS), ("listener", U1),
                                    ("content", parse("(p a)"))))
        eff = registry.effect(inst)
        assert canonical(eff) == "(bel u1 (bel sys (p a)))"

    def test_inform_effect_is_plain_belief(self, registry):
        inst = T.PrimAct("inform", (("agent", SYS), ("listener", U1),
                                    ("content", parse("(p a)"))))
        assert canonical(registry.effect(inst)) == "(bel u1 (p a))"

    def test_verifyref_effect_keeps_listener_belief_inside(self, registry):
        d = T.Descr(T.Var("V"), parse("(ssn u1 V)"))
        inst = T.PrimAct("verifyref", (("agent", SYS), ("listener", U1), ("descr", d)))
        eff = registry.effect(inst)
        assert isinstance(eff, T.KnowRef) and isinstance(eff.body, T.Bel)

    def test_request_conditions_computed_from_embedded_act(self, registry):
        inner = T.PrimAct("inform", (("agent", U1), ("listener", SYS),
                                     ("content", parse("(p a)"))))
        inst = T.PrimAct("request", (("agent", SYS), ("listener", U1), ("act", inner)))
        pre = registry.precondition(inst)
        assert canonical(pre) == "(bel sys (bel u1 (p a)))"
        eff = registry.effect(inst)
        assert isinstance(eff, T.Intend) and eff.agent == U1

    def test_duplicate_registration_rejected(self, registry):
        with pytest.raises(RegistryError):
            register_speech_acts(registry)

    def test_effect_operator_round_trip(self, registry):
        # planning from an act's own effect finds the act back
        for name in ("inform", "ynq", "whq", "informref"):
            desc = registry.get(name)
            sig, ren = T.standardize_apart(desc.signature)
            eff, _ = T.standardize_apart(desc.effect, ren)
            again = registry.get(name)
            sig2, ren2 = T.standardize_apart(again.signature)
            eff2, _ = T.standardize_apart(again.effect, ren2)
            env = unify(eff2, eff, ontology=registry.ontology)
            assert env is not None
            assert env.deep(sig2).name == name


class TestContentShapes:
    def test_descr_required_for_whq(self):
        with pytest.raises(ValueError):
            SpeechActInstance("whq", SYS, U1, parse("(p a)"))

    def test_request_requires_action(self):
        with pytest.raises(ValueError):
            SpeechActInstance("request", SYS, U1, parse("(p a)"))

    def test_unknown_type_rejected(self):
        with pytest.raises(ValueError):
            SpeechActInstance("mumble", SYS, U1, parse("(p a)"))


def _ctx_with_pending(effects):
    ctx = DialogueContext("sys")
    for i, eff in enumerate(effects):
        ctx.push_effect(eff, record_id=None, turn=i + 1)
    return ctx


class TestIdentify:
    def test_bare_value_resolves_newest_knowref(self, ontology):
        age = parse("(knowref sys (^ A#years (age_of u1 A#years)))")
        ctx = _ctx_with_pending([age])
        out = identify_user_speech_act(
            ValueLF(T.Num(Fraction(55), "years")), ctx, U1, SYS, ontology)
        assert out.act.act_type == "informref"
        assert out.binding[1] == T.Num(Fraction(55), "years")
        assert out.resolved_entry.status == "resolved"

    def test_type_filter_beats_recency(self, ontology):
        ontology.add_concept("occupation")
        ontology.add_instance("teacher", "occupation")
        age = parse("(knowref sys (^ A#years (age_of u1 A#years)))")
        job = parse("(knowref sys (^ O#occupation (occupation_of u1 O#occupation)))")
        date = parse("(knowref sys (^ D#date (when u1 D#date)))")
        ctx = _ctx_with_pending([age, job, date])
        out = identify_user_speech_act(
            ValueLF(T.Num(Fraction(55), "years")), ctx, U1, SYS, ontology)
        assert out.resolved_entry.effect is age

    def test_yes_resolves_newest_knowif(self, ontology):
        want = parse("(knowif sys (pgoal u1 (vaccinated u1)))")
        ctx = _ctx_with_pending([want])
        out = identify_user_speech_act(PolarLF(True), ctx, U1, SYS, ontology)
        assert out.act.act_type == "inform"
        assert canonical(out.act.content) == "(pgoal u1 (vaccinated u1))"

    def test_no_gives_negated_content(self, ontology):
        want = parse("(knowif sys (p a))")
        ctx = _ctx_with_pending([want])
        out = identify_user_speech_act(PolarLF(False), ctx, U1, SYS, ontology)
        assert canonical(out.act.content) == "(not (p a))"

    def test_why_targets_last_system_directive(self, ontology):
        ctx = DialogueContext("sys")
        occ = T.Occurrence(T.ActionRef(SYS, T.PrimAct(
            "whq", (("agent", SYS), ("listener", U1),
                    ("descr", T.Descr(T.Var("A"), parse("(age_of u1 A)"))))), T.TRUE),
            T.Atom("nil"), T.Num(Fraction(7)))
        ctx.record_act(DoneAct(7, SYS, U1, "whq", occ))
        out = identify_user_speech_act(WhyLF(), ctx, U1, SYS, ontology)
        assert out.act.act_type == "whq"
        assert out.act.content.body.name == "reason_of"

    def test_dont_know_negates_knowref(self, ontology):
        date = parse("(knowref sys (^ D#date (when u1 D#date)))")
        ctx = _ctx_with_pending([date])
        out = identify_user_speech_act(DontKnowLF(), ctx, U1, SYS, ontology)
        assert out.dont_know
        assert isinstance(out.act.content, T.Not)

    def test_unresolved_raises(self, ontology):
        ctx = DialogueContext("sys")
        with pytest.raises(UnresolvedAnswer):
            identify_user_speech_act(PolarLF(True), ctx, U1, SYS, ontology)

    def test_deterministic(self, ontology):
        age = parse("(knowref sys (^ A#years (age_of u1 A#years)))")
        first = identify_user_speech_act(
            ValueLF(T.Num(Fraction(55), "years")), _ctx_with_pending([age]),
            U1, SYS, ontology)
        second = identify_user_speech_act(
            ValueLF(T.Num(Fraction(55), "years")), _ctx_with_pending([age]),
            U1, SYS, ontology)
        assert canonical(first.act.to_prim().arg("descr").body) == \
            canonical(second.act.to_prim().arg("descr").body)

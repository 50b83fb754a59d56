"""Backward-chaining and hierarchical-decomposition planning rules.

Every rule reads active records from the session knowledge base and
derives new mental-state records, linked to their sources by reason
parents and typed plan-graph edges.  A (rule, source) pair fires at most
once per session unless explicitly replanned; blocked records never feed
any rule.

The probability of a derived record is its strongest parent's times a
per-rule decay, further scaled by a declared action prior where one
exists.  Attributed records below the confirmation threshold do not
drive goal adoption or helpful planning until the user confirms them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal

from . import terms as T
from .actions import RegistryError
from .kb import ACTIVE, BLOCKED, IMPOSSIBLE, SATISFIED, Record
from .speech import is_speech_act
from .syntax import canonical
from .unify import Subst, unify

DECAY = Decimal("0.9")
EVALUABLE_PREDS = {"gt", "ge", "lt", "le", "neq", "isa", "earliest", "latest"}
DEFAULT_THRESHOLD = Decimal("0.6")
TURN_RECORD_CAP = 500
MAX_DISJUNCTS = 3


@dataclass
class ClauseEntry:
    """One disjunctive rule clause under a knowif goal."""
    parent: int
    index: int
    head: object
    body: tuple         # conjunct formulas, post-assert variable names
    member_ids: tuple
    status: str = ACTIVE


@dataclass
class SlotInfo:
    """Bookkeeping for one knowref slot goal of an intended action."""
    goal_id: int
    var: T.Var
    intend_id: int
    constraints: list = field(default_factory=list)
    resolved: object = None


def occurrence(executor, prim, constraint=T.TRUE) -> T.Occurrence:
    return T.Occurrence(T.ActionRef(executor, prim, constraint),
                        T.Var(T.fresh_name("Loc")), T.Var(T.fresh_name("Time")))


def derive(sess, formula, rule, parents, prob, flags=(), edges=()):
    """Assert a rule product and wire provenance into the plan graph."""
    if sess.new_this_turn >= TURN_RECORD_CAP:
        sess.diagnostics.append(f"record cap reached; {rule} suppressed")
        return []
    res = sess.kb.assert_formula(formula, rule=rule, parents=tuple(parents),
                                 prob=prob, flags=flags)
    for old, newv in res.renaming.items():
        sess.kb.add_equality(T.Var(old), newv)
    for rid in res.ids:
        sess.new_this_turn += 1
        for parent in parents:
            sess.graph.add_edge("relativized-to", rid, parent)
        for etype, src, dst in edges:
            sess.graph.add_edge(etype, rid if src is None else src,
                                rid if dst is None else dst)
    return res.ids


def below_threshold(sess, rec: Record) -> bool:
    return rec.agent != sess.system.name and rec.prob < sess.threshold


def goal_records(sess, kinds=("pgoal", "knowif-goal", "knowref-goal")):
    return [r for r in sess.kb.active_records()
            if r.kind in kinds and r.status == ACTIVE]


def intend_records(sess, include_blocked=False):
    statuses = (ACTIVE, BLOCKED) if include_blocked else (ACTIVE,)
    return [r for r in sess.kb.active_records("intend") if r.status in statuses]


def _prim_of(rec: Record):
    expr = rec.formula.occ.act.expr
    return expr if isinstance(expr, T.PrimAct) else None


def _resolved_instance(sess, prim: T.PrimAct) -> T.PrimAct:
    return sess.kb.resolve(prim)


# ---------------------------------------------------------------------------
# planning rules
# ---------------------------------------------------------------------------


def rule_effect_action(sess) -> list:
    """A goal whose content unifies with some action's effect becomes an
    intention to do that action; several candidates become a disjunction."""
    new = []
    for rec in goal_records(sess):
        if below_threshold(sess, rec):
            continue
        key = ("effect_action", rec.rid)
        if key in sess.memo:
            continue
        owner = T.Atom(rec.agent)
        goal_body = sess.kb.resolve(rec.formula.body)
        if isinstance(goal_body, (T.KnowIf, T.KnowRef, T.Bel, T.Intend, T.PGoal, T.DoneF)):
            candidates = _speech_candidates(sess, owner, goal_body)
        else:
            candidates = _domain_candidates(sess, owner, goal_body)
        if not candidates:
            continue
        sess.memo.add(key)
        candidates.sort(key=lambda c: (-(c[0].prior or 0.5), c[0].name))
        if len(candidates) > MAX_DISJUNCTS:
            candidates = candidates[:MAX_DISJUNCTS]
        prob = rec.prob * sess.decay
        if len(candidates) == 1:
            desc, instance, executor = candidates[0]
            if desc.prior is not None:
                prob *= Decimal(str(desc.prior))
            occ = occurrence(executor, instance, _constraint_of(sess, desc, instance))
            ids = derive(sess, T.Intend(owner, occ), "effect_action", (rec.rid,),
                         prob, edges=[("achieves", None, rec.rid)])
        else:
            expr = None
            for desc, instance, _ in reversed(candidates):
                expr = instance if expr is None else T.DisjAct(instance, expr)
            occ = occurrence(owner, expr)
            ids = derive(sess, T.Intend(owner, occ), "effect_action", (rec.rid,),
                         prob, edges=[("achieves", None, rec.rid)])
        new.extend(ids)
    return new


def _constraint_of(sess, desc, instance):
    try:
        return sess.registry.constraint(instance)
    except RegistryError:
        return T.TRUE


def _instance_impossible(sess, instance: T.PrimAct) -> bool:
    """True when a recorded impossibility covers every way of taking this
    instance: open arguments here may still admit other values, so the
    stored fact must be at least as general."""
    from .kb import _freeze_vars
    probe = T.Impossible(T.ActionRef(T.Var(T.fresh_name("A")),
                                     _freeze_vars(sess.kb.resolve(instance)),
                                     T.Var(T.fresh_name("C"))))
    return sess.kb.prove_first(probe) is not None


def _intend_exists(sess, instance: T.PrimAct, owner=None) -> bool:
    """An intention for a matching act already exists.

    With ``owner`` given, only another agent's matching intention counts:
    the same agent's record would simply merge on assertion, and should.
    """
    for rec in intend_records(sess, include_blocked=True):
        prim = _prim_of(rec)
        if prim is None:
            continue
        if owner is not None and rec.agent == owner.name:
            continue
        if unify(sess.kb.resolve(prim), sess.kb.resolve(instance),
                 ontology=sess.kb.ontology) is not None:
            return True
    return False


def _domain_candidates(sess, owner, goal_body):
    out = []
    for desc in sess.registry.all():
        if is_speech_act(desc.name):
            continue
        sig, ren = T.standardize_apart(desc.signature)
        eff, _ = T.standardize_apart(desc.effect, ren)
        env = unify(eff, goal_body, ontology=sess.kb.ontology)
        if env is None:
            continue
        instance = env.deep(sig)
        exec_agent = instance.arg("agent")
        if isinstance(exec_agent, T.Var):
            bound = unify(exec_agent, owner, ontology=sess.kb.ontology)
            if bound is not None:
                instance = bound.deep(instance)
                exec_agent = owner
        if _instance_impossible(sess, instance) or _intend_exists(sess, instance, owner):
            continue
        out.append((desc, instance,
                    exec_agent if not isinstance(exec_agent, T.Var) else owner))
    return out


def _speech_candidates(sess, owner, goal_body):
    """Speech acts achieving a mental-state goal; the owner speaks.

    An unbound listener is resolved by proving the act's precondition:
    whoever can be shown to know the answer gets asked.
    """
    out = []
    for desc in sess.registry.all():
        if not is_speech_act(desc.name):
            continue
        if desc.name in ("greet", "emote", "confirm"):
            continue
        sig, ren = T.standardize_apart(desc.signature)
        eff, _ = T.standardize_apart(desc.effect, ren)
        pre, _ = T.standardize_apart(desc.precondition, ren)
        env = unify(eff, goal_body, ontology=sess.kb.ontology)
        if env is None:
            continue
        speaker = env.walk(sig.arg("agent"))
        if isinstance(speaker, T.Var):
            env2 = unify(speaker, owner, env, sess.kb.ontology)
            if env2 is None:
                continue
            env = env2
        elif speaker != owner:
            continue
        listener = env.walk(sig.arg("listener"))
        if isinstance(listener, T.Var):
            sols = sess.kb.prove_all(env.deep(pre), limit=1)
            if not sols:
                continue
            env2 = unify(listener, sols[0].deep(env.deep(listener)), env, sess.kb.ontology)
            if env2 is None or isinstance(env2.walk(listener), T.Var):
                continue
            env = env2
        instance = env.deep(sig)
        if instance.arg("agent") == instance.arg("listener"):
            continue
        if desc.name == "request":
            inner = instance.arg("act")
            if not _benefits_speaker(sess, inner):
                sess.diagnostics.append(
                    "request refused: act does not benefit the speaker")
                continue
        if _intend_exists(sess, instance, owner):
            continue
        out.append((desc, instance, instance.arg("agent")))
    return out


def _benefits_speaker(sess, inner) -> bool:
    if not isinstance(inner, T.PrimAct) or not sess.registry.known(inner.name):
        return False
    benefits = sess.registry.get(inner.name).benefits
    return "system" in benefits


def rule_act_precondition(sess) -> list:
    """Unsatisfied preconditions of intended domain actions become goals:
    a goal to achieve what is believed false, a goal to find out for what
    is merely unknown."""
    new = []
    for rec in intend_records(sess):
        prim = _prim_of(rec)
        if prim is None or is_speech_act(prim.name) or not sess.registry.known(prim.name):
            continue
        if below_threshold(sess, rec):
            continue
        key = ("act_precondition", rec.rid)
        if key in sess.memo:
            continue
        sess.memo.add(key)
        owner = T.Atom(rec.agent)
        pre = sess.registry.precondition(_resolved_instance(sess, prim))
        for conjunct in _conjuncts(pre):
            if conjunct == T.TRUE:
                continue
            if sess.kb.provable(conjunct):
                continue
            if isinstance(conjunct, (T.KnowRef, T.KnowIf)):
                continue  # knowledge preconditions route through helping
            if _believed_false(sess, conjunct):
                ids = derive(sess, T.PGoal(owner, conjunct), "act_precondition",
                             (rec.rid,), rec.prob * sess.decay,
                             edges=[("enables", None, rec.rid)])
            else:
                ids = derive(sess, T.PGoal(owner, T.KnowIf(owner, conjunct)),
                             "act_precondition", (rec.rid,), rec.prob * sess.decay)
            new.extend(ids)
    return new


def _conjuncts(f):
    return list(f.parts) if isinstance(f, T.And) else [f]


def _knowledge_state_of(f, agent) -> bool:
    return isinstance(f, (T.KnowRef, T.KnowIf)) and f.agent == agent


def _believed_false(sess, f) -> bool:
    if sess.kb.prove_first(T.Not(f)) is not None:
        return True
    head = f.name if isinstance(f, T.Pred) else None
    if head is not None and head in sess.kb.closed_world:
        return not sess.kb.provable(f)
    return False


def rule_act_applicability(sess) -> list:
    """Applicability conditions gate intentions: a false one makes the
    action impossible, an unknown one blocks the intention behind a goal
    to find out."""
    new = []
    for rec in intend_records(sess):
        prim = _prim_of(rec)
        if prim is None or not sess.registry.known(prim.name):
            continue
        if below_threshold(sess, rec):
            continue
        key = ("act_applicability", rec.rid)
        if key in sess.memo:
            continue
        ac = sess.registry.applicability_condition(_resolved_instance(sess, prim))
        if ac == T.TRUE:
            sess.memo.add(key)
            continue
        sess.memo.add(key)
        outcome = sess.kb.prove_first(ac)
        if outcome is not None:
            _maybe_inform_applicability(sess, rec, prim, ac, outcome)
            continue
        if _believed_false(sess, ac):
            mark_impossible(sess, rec, reason="applicability condition is false")
            continue
        sys_agent = sess.system
        rec.block_info = ("ac", ac)
        sess.kb.set_status(rec.rid, BLOCKED, "applicability unknown", sweep=False)
        ids = derive(sess, T.PGoal(sys_agent, T.KnowIf(sys_agent, ac)),
                     "act_applicability", (rec.rid,), rec.prob * sess.decay)
        new.extend(ids)
    return new


def _maybe_inform_applicability(sess, rec, prim, ac, proof):
    """A user-beneficial act the system verified it can do: tell the user
    what makes it possible."""
    if rec.agent != sess.system.name or not sess.registry.known(prim.name):
        return
    desc = sess.registry.get(prim.name)
    if "user" not in desc.benefits:
        return
    key = ("ac_inform", rec.rid)
    if key in sess.memo:
        return
    sess.memo.add(key)
    witness = sess.kb.resolve(proof.deep(ac))
    while isinstance(witness, T.Exists):
        witness = witness.body
    informative = [c for c in _conjuncts(witness)
                   if isinstance(c, T.Pred) and c.name not in EVALUABLE_PREDS]
    if not informative:
        return
    witness = T.conj(informative)
    if T.free_vars(witness):
        return
    derive(sess, T.PGoal(sess.system, T.Bel(sess.user, witness)),
           "ac_verified_inform", (rec.rid,), rec.prob * sess.decay)


def mark_impossible(sess, rec: Record, reason: str = ""):
    prim = _prim_of(rec)
    if prim is not None:
        # permanent: the act must never be planned again even after the
        # intention and its support are gone
        sess.kb.assert_formula(
            T.Impossible(T.ActionRef(rec.formula.occ.act.agent, sess.kb.resolve(prim), T.TRUE)),
            rule="impossible", parents=())
    sess.kb.set_status(rec.rid, IMPOSSIBLE, reason, sweep=False)
    swept = sess.kb.sweep_unsupported(note=f"impossible:{rec.rid}")
    for parent in rec.parent_ids():
        sess.memo.discard(("effect_action", parent))  # allow replanning
    return swept


def rule_act_body(sess) -> list:
    """Hierarchical decomposition of intended domain actions."""
    new = []
    for rec in intend_records(sess):
        prim = _prim_of(rec)
        if prim is None or is_speech_act(prim.name) or not sess.registry.known(prim.name):
            continue
        if below_threshold(sess, rec):
            continue
        key = ("act_body", rec.rid)
        if key in sess.memo:
            continue
        body = sess.registry.body(_resolved_instance(sess, prim))
        sess.memo.add(key)
        if body is None:
            continue
        owner = T.Atom(rec.agent)
        occ = T.Occurrence(T.ActionRef(rec.formula.occ.act.agent, body,
                                       rec.formula.occ.act.constraint),
                           T.Var(T.fresh_name("Loc")), T.Var(T.fresh_name("Time")))
        ids = derive(sess, T.Intend(owner, occ), "act_body", (rec.rid,),
                     rec.prob * sess.decay, edges=[("decomposes", None, rec.rid)])
        new.extend(ids)
    return new


def rule_complex_intentions(sess) -> list:
    """Intentions over seq/condit/disj decompose into relativized parts."""
    new = []
    for rec in intend_records(sess):
        if below_threshold(sess, rec):
            continue
        expr = rec.formula.occ.act.expr
        occ = rec.formula.occ
        owner = T.Atom(rec.agent)
        actor = occ.act.agent
        constraint = occ.act.constraint
        prob = rec.prob * sess.decay

        def sub_occ(e):
            return T.Occurrence(T.ActionRef(actor, e, constraint),
                                T.Var(T.fresh_name("Loc")), T.Var(T.fresh_name("Time")))

        if isinstance(expr, T.SeqAct) and ("seq_intend", rec.rid) not in sess.memo:
            sess.memo.add(("seq_intend", rec.rid))
            first = expr.parts[0]
            rest = expr.parts[1] if len(expr.parts) == 2 else T.SeqAct(expr.parts[1:])
            first_occ = sub_occ(first)
            new += derive(sess, T.Intend(owner, first_occ), "intend_seq", (rec.rid,),
                          prob, edges=[("decomposes", None, rec.rid)])
            gated = T.ConditAct(T.DoneF(first_occ), rest)
            new += derive(sess, T.Intend(owner, sub_occ(gated)), "intend_seq", (rec.rid,),
                          prob, edges=[("decomposes", None, rec.rid)])
        elif isinstance(expr, T.DisjAct) and ("disj_intend", rec.rid) not in sess.memo:
            sess.memo.add(("disj_intend", rec.rid))
            left_occ, right_occ = sub_occ(expr.left), sub_occ(expr.right)
            new += derive(sess, T.Intend(owner, sub_occ(T.ConditAct(T.Not(T.DoneF(right_occ)), expr.left))),
                          "intend_disj", (rec.rid,), prob, edges=[("decomposes", None, rec.rid)])
            new += derive(sess, T.Intend(owner, sub_occ(T.ConditAct(T.Not(T.DoneF(left_occ)), expr.right))),
                          "intend_disj", (rec.rid,), prob, edges=[("decomposes", None, rec.rid)])
        elif isinstance(expr, T.ConditAct):
            cond = sess.kb.resolve(expr.cond)
            if sess.kb.provable(cond):
                if ("condit_fire", rec.rid) not in sess.memo:
                    sess.memo.add(("condit_fire", rec.rid))
                    new += derive(sess, T.Intend(owner, sub_occ(expr.body)), "intend_condit",
                                  (rec.rid,), prob, edges=[("decomposes", None, rec.rid)])
            elif not isinstance(cond, (T.DoneF, T.Not)):
                if ("condit_knowif", rec.rid) not in sess.memo:
                    sess.memo.add(("condit_knowif", rec.rid))
                    new += derive(sess, T.PGoal(owner, T.KnowIf(owner, cond)),
                                  "intend_condit", (rec.rid,), prob)
    return new


def rule_act_knowref(sess) -> list:
    """Slot goals: for each required-but-unknown argument of an intended
    action, a goal to know the value the decider wants it to take."""
    new = []
    for rec in intend_records(sess):
        prim = _prim_of(rec)
        if prim is None or is_speech_act(prim.name) or not sess.registry.known(prim.name):
            continue
        if below_threshold(sess, rec):
            continue
        owner = T.Atom(rec.agent)
        decider = _decider_for(sess, rec)
        unknown = sess.registry.unknown_obligatory_arguments(
            sess.kb.resolve(prim), sess.kb, owner, decider)
        for role, var in unknown:
            key = ("act_knowref", rec.rid, role)
            if key in sess.memo:
                continue
            sess.memo.add(key)
            want = T.PGoal(decider, T.DoneF(rec.formula.occ))
            goal = T.PGoal(owner, T.KnowRef(owner, var, want))
            ids = derive(sess, goal, "act_knowref", (rec.rid,), rec.prob * sess.decay)
            new.extend(ids)
            for rid in ids:
                sess.slots[rid] = SlotInfo(rid, var, rec.rid)
    return new


def _decider_for(sess, rec: Record):
    """Whose preference fills this action's open slots: the user when the
    act is a system act the user asked for, else the intender."""
    owner = T.Atom(rec.agent)
    if rec.agent != sess.system.name:
        return owner
    probe = T.PGoal(sess.user, T.DoneF(rec.formula.occ))
    if sess.kb.prove_first(probe) is not None:
        return sess.user
    for r in sess.kb.active_records("intend"):
        if r.agent == sess.user.name and r.rid != rec.rid:
            p1, p2 = _prim_of(r), _prim_of(rec)
            if p1 is not None and p2 is not None and unify(
                    sess.kb.resolve(p1), sess.kb.resolve(p2),
                    ontology=sess.kb.ontology) is not None:
                return sess.user
    return sess.user if _benefits_user(sess, rec) else owner


def _benefits_user(sess, rec) -> bool:
    prim = _prim_of(rec)
    if prim is None or not sess.registry.known(prim.name):
        return False
    return "user" in sess.registry.get(prim.name).benefits


def rule_adopt_user_goals(sess) -> list:
    """Collaborative goal adoption: user goals become system goals unless
    they conflict with an existing system goal."""
    new = []
    for rec in list(sess.kb.active_records()):
        if rec.status != ACTIVE or rec.agent == sess.system.name:
            continue
        if rec.kind not in ("pgoal", "knowif-goal", "knowref-goal", "intend"):
            continue
        if below_threshold(sess, rec):
            continue
        key = ("adopt", rec.rid)
        if key in sess.memo:
            continue
        sess.memo.add(key)
        if isinstance(rec.formula, T.Intend):
            actor = sess.kb.resolve(rec.formula.occ.act.agent)
            if not (isinstance(actor, T.Atom) and actor.name == sess.system.name):
                continue  # adopt another agent's act only when we are to do it
            content = T.DoneF(rec.formula.occ)
        else:
            content = rec.formula.body
        if _conflicts_with_system_goal(sess, content):
            sess.diagnostics.append(f"not adopting conflicting goal of record {rec.rid}")
            continue
        ids = derive(sess, T.PGoal(sess.system, content), "adopt_user_goal",
                     (rec.rid,), rec.prob)
        new.extend(ids)
    return new


def _conflicts_with_system_goal(sess, content) -> bool:
    negated = content.body if isinstance(content, T.Not) else T.Not(content)
    for rec in sess.kb.active_records():
        if rec.kind in ("pgoal", "knowif-goal", "knowref-goal") \
                and rec.agent == sess.system.name:
            if unify(rec.formula.body, negated, ontology=sess.kb.ontology) is not None:
                return True
    return False


def rule_decompose_knowif(sess) -> list:
    """A goal to know whether a rule head holds spawns per-clause goals to
    know whether each body holds; achieving any one settles the parent."""
    new = []
    for rec in goal_records(sess, ("knowif-goal",)):
        if rec.agent != sess.system.name:
            continue
        key = ("decompose_knowif", rec.rid)
        if key in sess.memo:
            continue
        head = sess.kb.resolve(rec.formula.body.body)
        if not isinstance(head, T.Pred):
            continue
        clauses = []
        for rule in sess.kb.rules:
            if rule.agent is not None or not isinstance(rule.head, T.Pred):
                continue
            rhead, ren = T.standardize_apart(rule.head)
            env = unify(rhead, head, ontology=sess.kb.ontology)
            if env is None:
                continue
            body = tuple(env.deep(T.standardize_apart(b, ren)[0]) for b in rule.body)
            clauses.append(body)
        if not clauses:
            continue
        sess.memo.add(key)
        sysa = sess.system
        for index, body in enumerate(clauses):
            goal = T.PGoal(sysa, T.KnowIf(sysa, T.conj(list(body))))
            res = sess.kb.assert_formula(goal, rule="decompose_knowif",
                                         parents=(rec.rid,), prob=rec.prob * sess.decay,
                                         flags={"internal"})
            for old, newv in res.renaming.items():
                sess.kb.add_equality(T.Var(old), newv)
            for rid in res.ids:
                sess.new_this_turn += 1
                sess.graph.add_edge("relativized-to", rid, rec.rid)
            renamed_body = tuple(T.substitute(b, res.renaming) for b in body)
            sess.clauses.append(ClauseEntry(rec.rid, index, head, renamed_body,
                                            tuple(res.ids)))
            new.extend(res.ids)
    return new


def evaluate_clauses(sess):
    """Refresh clause status: a clause with a provably false conjunct is
    impossible and its member goals drop; all clauses false settles the
    parent negatively."""
    for entry in sess.clauses:
        if entry.status != ACTIVE:
            continue
        parent = sess.kb.records.get(entry.parent)
        if parent is None or parent.status not in (ACTIVE, BLOCKED):
            entry.status = "dropped"
            continue
        if _clause_false(sess, entry.body):
            entry.status = IMPOSSIBLE
            for rid in entry.member_ids:
                rec = sess.kb.records.get(rid)
                if rec is not None and rec.status in (ACTIVE, BLOCKED):
                    sess.kb.set_status(rid, IMPOSSIBLE, "clause refuted", sweep=False)
            sess.kb.sweep_unsupported(note="clause refuted")
    for parent_id in {e.parent for e in sess.clauses}:
        entries = [e for e in sess.clauses if e.parent == parent_id]
        parent = sess.kb.records.get(parent_id)
        if parent is None or parent.status not in (ACTIVE, BLOCKED):
            continue
        if entries and all(e.status == IMPOSSIBLE for e in entries):
            head = parent.formula.body.body
            if not T.free_vars(sess.kb.resolve(head)):
                sess.kb.assert_formula(T.Not(sess.kb.resolve(head)),
                                       rule="all_clauses_false", parents=(parent_id,))


def _clause_false(sess, body) -> bool:
    env = Subst()
    for conjunct in body:
        inst = sess.kb.resolve(env.deep(conjunct))
        sol = sess.kb.prove_first(inst)
        if sol is not None:
            env = sol
            continue
        if _believed_false(sess, inst):
            return True
        return False
    return False


def rule_attach_offer_goal(sess) -> list:
    """System acts that benefit the user wait for the user to want them."""
    new = []
    for rec in intend_records(sess):
        if rec.agent != sess.system.name:
            continue
        prim = _prim_of(rec)
        if prim is None or is_speech_act(prim.name) or not _benefits_user(sess, rec):
            continue
        key = ("offer", rec.rid)
        if key in sess.memo:
            continue
        sess.memo.add(key)
        want = T.PGoal(sess.user, T.DoneF(rec.formula.occ))
        if sess.kb.prove_first(want) is not None:
            continue  # already wanted: no offer needed
        rec.block_info = ("offer", want, sess.kb.turn)
        sess.kb.set_status(rec.rid, BLOCKED, "awaiting acceptance", sweep=False)
        ids = derive(sess, T.PGoal(sess.system, T.KnowIf(sess.system, want)),
                     "attach_offer", (rec.rid,), rec.prob * sess.decay)
        new.extend(ids)
    return new


def attach_slot_constraint(sess, constraint: T.Descr) -> list:
    """Fold a stated constraint into the matching open slot goal.

    The constraint lands inside the user's wanting, not as a system
    belief.  The stated description replaces the user's presumed direct
    knowledge of the value; when the constrained description is uniquely
    satisfiable the value is resolved and an inform-then-offer sequence
    is planned.  An unsatisfiable constraint set yields a goal to tell
    the user it cannot be met.
    """
    slot = _matching_slot(sess, constraint.var)
    if slot is None:
        sess.diagnostics.append("constraint with no open slot")
        return []
    goal = sess.kb.records[slot.goal_id]
    body = T.substitute(constraint.body, {constraint.var.name: slot.var})
    intend0 = sess.kb.records.get(slot.intend_id)
    if intend0 is not None:
        prim0 = _prim_of(intend0)
        if prim0 is not None:
            body = _ground_against(sess, body, sess.kb.resolve(prim0), slot.var)
    slot.constraints.append(body)
    # the user stated a description, not a value: withdraw the presumption
    # that the user knows the value outright
    want = goal.formula.body.body
    sess.kb.assert_formula(T.Not(T.KnowRef(sess.user, slot.var, want)),
                           rule="constraint_overrides_default", parents=(slot.goal_id,),
                           standardize=False)
    _embed_slot_constraint(sess, slot, body)
    intend = sess.kb.records.get(slot.intend_id)
    solutions = _solve_slot(sess, slot)
    new = []
    if len(solutions) == 1:
        value = solutions[0]
        slot.resolved = value
        # the system now knows the value satisfying the description; what
        # remains open is whether the user accepts it
        if goal.status in (ACTIVE, BLOCKED):
            sess.kb.set_status(slot.goal_id, SATISFIED, "constraint resolved",
                               sweep=False)
        occ = sess.kb.resolve(intend.formula.occ) if intend is not None else None
        if occ is not None:
            occ = class_substitute(sess, occ, slot.var, value)
            inform_content = class_substitute(
                sess, sess.kb.resolve(T.conj([c for c in slot.constraints])),
                slot.var, value)
            offer = T.PGoal(sess.user, T.DoneF(occ))
            if intend.status in (ACTIVE, BLOCKED):
                intend.block_info = ("offer", offer, sess.kb.turn + 1)
                if intend.status == ACTIVE:
                    sess.kb.set_status(intend.rid, BLOCKED, "awaiting value acceptance",
                                       sweep=False)
            # tell the value, then offer it; emission order does the
            # sequencing (informatives always precede the question)
            tell = T.PrimAct("inform", (("agent", sess.system), ("listener", sess.user),
                                        ("content", inform_content)))
            ask = T.PrimAct("ynq", (("agent", sess.system), ("listener", sess.user),
                                    ("content", offer)))
            ids = []
            for prim in (tell, ask):
                ids += derive(sess, T.Intend(sess.system, occurrence(sess.system, prim)),
                              "slot_resolved", (), goal.prob * sess.decay)
            for rid in ids:
                sess.graph.add_edge("relativized-to", rid, slot.goal_id)
            new += ids
    elif not solutions:
        impossible = T.Not(T.Exists(slot.var, T.conj(list(slot.constraints))))
        sess.kb.assert_formula(impossible, rule="slot_unsatisfiable",
                               parents=(), standardize=False)
        ids = derive(sess, T.PGoal(sess.system, T.Bel(sess.user, impossible)),
                     "slot_unsatisfiable", (), goal.prob * sess.decay)
        for rid in ids:
            sess.graph.add_edge("relativized-to", rid, slot.goal_id)
        new += ids
    return new


def _ground_against(sess, body, prim: T.PrimAct, keep: T.Var):
    """Bind the constraint's free variables to same-typed arguments of the
    constrained action: 'the earliest time available' is implicitly about
    this appointment's business and date."""
    mapping = {}
    used = set()
    for v in sorted(T.free_vars(body), key=lambda x: x.name):
        if v.name == keep.name:
            continue
        for role, val in prim.args:
            if role in used:
                continue
            rv = sess.kb.resolve(val)
            if isinstance(rv, T.Var):
                continue
            c = T.concept_of(rv, sess.kb.ontology)
            if v.concept != T.TOP and c != T.TOP and \
                    sess.kb.ontology.is_subconcept(c, v.concept):
                mapping[v.name] = rv
                used.add(role)
                break
    return T.substitute(body, mapping)


def class_substitute(sess, node, var: T.Var, value):
    """Replace every variable in ``var``'s equivalence class by ``value``."""
    def sub(n):
        if isinstance(n, T.Var):
            return value if sess.kb.equalities.same_class(n, var) else n
        if isinstance(n, (T.KnowRef, T.Exists, T.Descr)):
            if isinstance(n, T.KnowRef):
                return T.KnowRef(sub(n.agent), n.var, sub(n.body))
            if isinstance(n, T.Exists):
                return T.Exists(n.var, sub(n.body))
            return T.Descr(n.var, sub(n.body))
        return T.map_node(n, sub)
    return sub(node)


def _matching_slot(sess, var: T.Var):
    candidates = [s for s in sess.slots.values()
                  if sess.kb.records.get(s.goal_id) is not None
                  and sess.kb.records[s.goal_id].status in (ACTIVE, SATISFIED)]
    # open slots first; a resolved slot may still be re-constrained
    for pool in (
        [s for s in candidates if s.resolved is None
         and sess.kb.records[s.goal_id].status == ACTIVE],
        candidates,
    ):
        for slot in reversed(pool):
            if sess.kb.ontology.compatible(slot.var.concept, var.concept) is not None:
                return slot
    return None


def _embed_slot_constraint(sess, slot: SlotInfo, body):
    """Conjoin the constraint onto the intended occurrence's constraint slot,
    inside the user's wanting."""
    goal = sess.kb.records[slot.goal_id]
    f = goal.formula

    def extend(occ: T.Occurrence) -> T.Occurrence:
        old = occ.act.constraint
        return T.Occurrence(T.ActionRef(occ.act.agent, occ.act.expr, T.conj([old, body])),
                            occ.location, occ.time)

    want = f.body.body
    if isinstance(want, T.PGoal) and isinstance(want.body, T.DoneF):
        new_want = T.PGoal(want.agent, T.DoneF(extend(want.body.occ)), want.rel, want.prob)
        goal.formula = T.PGoal(f.agent, T.KnowRef(f.body.agent, f.body.var, new_want),
                               f.rel, f.prob)


def _solve_slot(sess, slot: SlotInfo) -> list:
    """Values satisfying every stated constraint, drawn from what the
    intended action's applicability condition admits."""
    stated = [_to_class_var(sess, c, slot.var) for c in slot.constraints]
    superlatives = [c for c in stated if _has_superlative(c)]
    filters = [c for c in stated if not _has_superlative(c)]
    admissible = []
    intend = sess.kb.records.get(slot.intend_id)
    if intend is not None:
        prim = _prim_of(intend)
        if prim is not None and sess.registry.known(prim.name):
            try:
                ac = sess.registry.applicability_condition(sess.kb.resolve(prim))
            except RegistryError:
                ac = T.TRUE
            if ac != T.TRUE:
                admissible.append(_to_class_var(sess, ac, slot.var))
    # superlatives pick their own witness; the applicability condition
    # enumerates candidates for plain comparisons to filter
    query = T.conj(superlatives + admissible + filters)
    values = []
    for sol in sess.kb.prove_all(query, limit=8):
        v = sess.kb.resolve(sol.deep(slot.var))
        if isinstance(v, T.Var):
            continue
        if v not in values:
            values.append(v)
    return values


def _has_superlative(f) -> bool:
    return any(isinstance(n, T.Pred) and n.name in ("earliest", "latest")
               for n in T.walk_nodes(f))


def _to_class_var(sess, node, var: T.Var):
    """Rewrite occurrences of the slot variable's class mates to the slot
    variable itself, so conjoined constraints share one free variable."""
    def sub(n):
        if isinstance(n, T.Var):
            return var if sess.kb.equalities.same_class(n, var) else n
        if isinstance(n, (T.KnowRef, T.Exists, T.Descr)):
            if isinstance(n, T.KnowRef):
                return T.KnowRef(sub(n.agent), n.var, sub(n.body))
            if isinstance(n, T.Exists):
                return T.Exists(n.var, sub(n.body))
            return T.Descr(n.var, sub(n.body))
        return T.map_node(n, sub)
    return sub(node)


def _plan_knowif_exists(sess):
    from .recognizer import rule_knowif_exists
    return rule_knowif_exists(sess)


PLAN_RULES = (
    rule_adopt_user_goals,
    rule_effect_action,
    rule_act_applicability,
    rule_attach_offer_goal,
    rule_act_precondition,
    rule_act_body,
    rule_complex_intentions,
    rule_act_knowref,
    rule_decompose_knowif,
    _plan_knowif_exists,
)


def plan_fixpoint(sess) -> list:
    """Run planning rules to quiescence; returns ids of new records."""
    created = []
    for _ in range(50):
        before = len(created)
        for rule in PLAN_RULES:
            created.extend(rule(sess))
        evaluate_clauses(sess)
        if len(created) == before:
            break
        if sess.new_this_turn >= TURN_RECORD_CAP:
            sess.diagnostics.append("plan fixpoint stopped at record cap")
            break
    else:
        sess.diagnostics.append("plan fixpoint iteration cap reached")
    return created

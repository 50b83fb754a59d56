"""Forward plan recognition over observed acts.

Observing an act stores its occurrence, attributes the speaker a
persistent goal toward the act's effect (collapsed through the
listener-believes layer for trusted speakers), and attributes belief in
the act's precondition.  The recognition rules then expand the
attributed plan until quiescence: from acts to their effects, from
wanted preconditions to the acts they enable, from body elements to the
higher acts containing them, from knowing-whether-exists to
knowing-which, from wanted values to the actions that would use them,
and from wanted locations to the normal activity done there.

Inferred records carry decayed probabilities; when the strongest
explanation of the user's utterance still sits below the confirmation
threshold, the system asks rather than assumes.
"""

from __future__ import annotations

from decimal import Decimal

from . import terms as T
from .actions import RegistryError
from .kb import ACTIVE, BLOCKED
from .planner import (
    derive, goal_records, intend_records, occurrence, _prim_of,
    _intend_exists, below_threshold,
)
from .speech import SpeechActInstance, is_speech_act
from .unify import unify


def observe_act(sess, act: SpeechActInstance, record_done=True) -> list:
    """Store an observed act and attribute the mental states it reveals."""
    prim = act.to_prim()
    occ = T.Occurrence(T.ActionRef(act.speaker, prim, T.TRUE),
                       T.Atom("nil"), T.Num(__import__("fractions").Fraction(sess.turn)))
    new = []
    done_ids = []
    if record_done:
        res = sess.kb.assert_formula(T.DoneF(occ), rule="observed", parents=(),
                                     standardize=False)
        done_ids = res.ids
        new.extend(res.ids)
    parents = tuple(done_ids)
    speaker_trusted = isinstance(act.speaker, T.Atom) and act.speaker.name in sess.kb.trusted
    try:
        effect = sess.registry.effect(prim)
    except RegistryError:
        effect = None
    if effect is not None and effect != T.TRUE:
        if _is_informational(act.act_type):
            # the speaker wants the listener in the effect state; trusting
            # the speaker, take the content on board directly
            if speaker_trusted:
                new += derive(sess, effect, act.act_type, parents, T.ONE)
            else:
                new += derive(sess, T.PGoal(act.speaker, effect), act.act_type,
                              parents, T.ONE)
        else:
            want = T.PGoal(act.speaker, effect)
            if not speaker_trusted:
                want = T.Bel(sess.system, T.PGoal(act.speaker, want))
            new += derive(sess, want, "observed_effect", parents, T.ONE)
    try:
        pre = sess.registry.precondition(prim)
    except RegistryError:
        pre = None
    if pre is not None and pre != T.TRUE and act.act_type != "request":
        new += derive(sess, T.Bel(act.speaker, pre), "observed_precondition",
                      parents, T.ONE)
    return new


def _is_informational(act_type: str) -> bool:
    return act_type in ("inform", "informref", "confirm")


# ---------------------------------------------------------------------------
# recognition rules
# ---------------------------------------------------------------------------


def rule_act_effect(sess) -> list:
    """Whoever intends an act presumably wants its effect."""
    new = []
    for rec in intend_records(sess):
        prim = _prim_of(rec)
        if prim is None or not sess.registry.known(prim.name):
            continue
        if is_speech_act(prim.name):
            continue
        key = ("act_effect", rec.rid)
        if key in sess.memo:
            continue
        sess.memo.add(key)
        effect = sess.registry.effect(sess.kb.resolve(prim))
        if effect == T.TRUE:
            continue
        owner = T.Atom(rec.agent)
        ids = derive(sess, T.PGoal(owner, effect), "act_effect", (rec.rid,),
                     rec.prob * sess.decay, edges=[("achieves", rec.rid, None)])
        new.extend(ids)
    return new


def rule_precondition_act(sess) -> list:
    """A wanted state that is some action's precondition suggests the
    agent means to do that action."""
    new = []
    for rec in goal_records(sess, ("pgoal",)):
        if rec.agent == sess.system.name:
            continue
        key = ("precondition_act", rec.rid)
        if key in sess.memo:
            continue
        body = sess.kb.resolve(rec.formula.body)
        if isinstance(body, T.MODAL_TYPES + (T.Not, T.DoneF, T.DoF, T.DoingF)):
            continue
        owner = T.Atom(rec.agent)
        candidates = []
        for desc in sess.registry.all():
            if is_speech_act(desc.name):
                continue
            sig, ren = T.standardize_apart(desc.signature)
            pre, _ = T.standardize_apart(desc.precondition, ren)
            matched = False
            for conjunct in (pre.parts if isinstance(pre, T.And) else (pre,)):
                env = unify(conjunct, body, ontology=sess.kb.ontology)
                if env is None:
                    continue
                instance = env.deep(sig)
                agent_role = instance.arg("agent")
                if isinstance(agent_role, T.Var):
                    bound = unify(agent_role, owner, ontology=sess.kb.ontology)
                    if bound is None:
                        continue
                    instance = bound.deep(instance)
                if _intend_exists(sess, instance):
                    continue
                candidates.append((desc, instance))
                matched = True
                break
            if matched:
                continue
        if not candidates:
            continue
        sess.memo.add(key)
        candidates.sort(key=lambda c: (-(c[0].prior or 0.5), c[0].name))
        prob = rec.prob * sess.decay
        if len(candidates) > 3:
            marker = T.Pred("wants_some_action_enabled_by", (rec.formula.body,))
            new += derive(sess, T.PGoal(owner, marker), "precondition_act",
                          (rec.rid,), prob)
            continue
        if len(candidates) == 1:
            desc, instance = candidates[0]
            executor = instance.arg("agent")
            executor = executor if not isinstance(executor, T.Var) else owner
            occ = occurrence(executor, instance)
        else:
            expr = None
            for _, instance in reversed(candidates):
                expr = instance if expr is None else T.DisjAct(instance, expr)
            occ = occurrence(owner, expr)
        ids = derive(sess, T.Intend(owner, occ), "precondition_act", (rec.rid,),
                     prob, edges=[("enables", rec.rid, None)])
        new.extend(ids)
    return new


def rule_body_action(sess) -> list:
    """Plan parsing: an intended act that is an element of some higher
    action's body suggests the higher act, whose own support is unknown."""
    new = []
    for rec in intend_records(sess):
        prim = _prim_of(rec)
        if prim is None:
            continue
        key = ("body_action", rec.rid)
        if key in sess.memo:
            continue
        parents = sess.registry.in_body(prim.name)
        if not parents:
            continue
        sess.memo.add(key)
        owner = T.Atom(rec.agent)
        for parent_name in sorted(parents):
            desc = sess.registry.get(parent_name)
            sig, ren = T.standardize_apart(desc.signature)
            body, _ = T.standardize_apart(desc.body, ren)
            env = _match_body_element(sess, body, sess.kb.resolve(prim))
            if env is None:
                continue
            instance = env.deep(sig)
            if _intend_exists(sess, instance):
                continue
            executor = instance.arg("agent")
            executor = executor if not isinstance(executor, T.Var) else owner
            ids = derive(sess, T.Intend(owner, occurrence(executor, instance)),
                         "body_action", (rec.rid,), rec.prob * sess.decay,
                         edges=[("decomposes", rec.rid, None)])
            for rid in ids:
                sess.graph.add_edge("dependency-unknown", rid, None)
                sess.graph.add_edge("relativized-to", rec.rid, rid)
            new.extend(ids)
    return new


def _match_body_element(sess, body, prim):
    if isinstance(body, T.PrimAct):
        return unify(body, prim, ontology=sess.kb.ontology)
    for child in T.children(body):
        if isinstance(child, (T.PrimAct, T.SeqAct, T.ConditAct, T.DisjAct)):
            env = _match_body_element(sess, child, prim)
            if env is not None:
                return env
    return None


def rule_knowif_exists(sess) -> list:
    """Wanting to know whether something exists is wanting to know which."""
    new = []
    for rec in goal_records(sess, ("knowif-goal",)):
        key = ("knowif_exists", rec.rid)
        if key in sess.memo:
            continue
        knowif = rec.formula.body
        body = knowif.body
        if isinstance(body, T.Exists):
            var, inner = body.var, body.body
        elif isinstance(body, T.Pred) and body.name not in EVALUABLE:
            fv = sorted(T.free_vars(body), key=lambda v: v.name)
            fv = [v for v in fv if sess.kb.equalities.resolve(v) is v or
                  isinstance(sess.kb.equalities.resolve(v), T.Var)]
            if len(fv) != 1:
                continue
            var, inner = fv[0], body
        else:
            continue
        sess.memo.add(key)
        owner = T.Atom(rec.agent)
        ids = derive(sess, T.PGoal(owner, T.KnowRef(knowif.agent, var, inner)),
                     "knowif_exists", (rec.rid,), rec.prob * sess.decay,
                     flags=rec.flags & {"internal"})
        new.extend(ids)
    return new


EVALUABLE = {"gt", "ge", "lt", "le", "neq", "isa", "earliest", "latest"}


def rule_val_action(sess) -> list:
    """Wanting to know a value that is a required argument of an action
    suggests wanting that action done, constrained by the description."""
    new = []
    for rec in goal_records(sess, ("knowref-goal",)):
        if rec.agent == sess.system.name:
            continue
        key = ("val_action", rec.rid)
        if key in sess.memo:
            continue
        knowref = rec.formula.body
        var, body = knowref.var, knowref.body
        if isinstance(body, (T.PGoal, T.Intend, T.DoneF, T.Bel)):
            continue
        owner = T.Atom(rec.agent)
        candidates = []
        for desc in sess.registry.all():
            if is_speech_act(desc.name):
                continue
            for role in desc.required:
                role_var = desc.role_var(role)
                if role_var is None or not isinstance(role_var, T.Var):
                    continue
                if sess.kb.ontology.compatible(var.concept, role_var.concept) is None:
                    continue
                agent_var = desc.agent_var()
                if isinstance(agent_var, T.Var) and \
                        sess.kb.ontology.compatible(
                            agent_var.concept,
                            T.concept_of(owner, sess.kb.ontology)) is None:
                    continue
                candidates.append((desc, role))
                break
        if not candidates:
            continue
        sess.memo.add(key)
        candidates.sort(key=lambda c: (-(c[0].prior or 0.5), c[0].name))
        desc, role = candidates[0]
        sig, ren = T.standardize_apart(desc.signature)
        env = unify(sig.arg(role), var, ontology=sess.kb.ontology)
        if env is None:
            continue
        agent_var = sig.arg("agent")
        if isinstance(agent_var, T.Var):
            env2 = unify(env.walk(agent_var), owner, env, sess.kb.ontology)
            if env2 is not None:
                env = env2
        instance = env.deep(sig)
        try:
            base_constraint = sess.registry.constraint(instance)
        except RegistryError:
            base_constraint = T.TRUE
        occ = T.Occurrence(
            T.ActionRef(owner, instance, T.conj([base_constraint, body])),
            T.Var(T.fresh_name("Loc")), T.Var(T.fresh_name("Time")))
        prob = rec.prob * sess.decay
        want = T.PGoal(owner, T.DoneF(occ))
        slot_ids = derive(sess, T.PGoal(owner, T.KnowRef(owner, var, want)),
                          "val_action", (rec.rid,), prob)
        intend_ids = derive(sess, T.Intend(owner, occ), "val_action", (rec.rid,), prob)
        new.extend(slot_ids + intend_ids)
    return new


def rule_knowif_action(sess) -> list:
    """Wanting to know whether an applicability condition holds suggests
    intending the action it conditions."""
    new = []
    for rec in goal_records(sess, ("knowif-goal",)):
        if rec.agent == sess.system.name:
            continue
        key = ("knowif_action", rec.rid)
        if key in sess.memo:
            continue
        body = sess.kb.resolve(rec.formula.body.body)
        owner = T.Atom(rec.agent)
        for desc in sess.registry.all():
            if is_speech_act(desc.name) or desc.applicability == T.TRUE:
                continue
            sig, ren = T.standardize_apart(desc.signature)
            ac, _ = T.standardize_apart(desc.applicability, ren)
            for conjunct in (ac.parts if isinstance(ac, T.And) else (ac,)):
                env = unify(conjunct, body, ontology=sess.kb.ontology)
                if env is None:
                    continue
                instance = env.deep(sig)
                if _intend_exists(sess, instance):
                    continue
                sess.memo.add(key)
                executor = instance.arg("agent")
                executor = executor if not isinstance(executor, T.Var) else owner
                ids = derive(sess, T.Intend(owner, occurrence(executor, instance)),
                             "knowif_action", (rec.rid,), rec.prob * sess.decay)
                sess.graph.add_edge("relativized-to", rec.rid, ids[0]) if ids else None
                new.extend(ids)
                break
            if key in sess.memo:
                break
    return new


def rule_normal_activity(sess) -> list:
    """Wanting to be somewhere suggests wanting the normal activity there."""
    new = []
    for rec in goal_records(sess, ("pgoal",)):
        key = ("normal_activity", rec.rid)
        if key in sess.memo:
            continue
        body = sess.kb.resolve(rec.formula.body)
        if not (isinstance(body, T.Pred) and body.name == "located_at" and len(body.args) == 2):
            continue
        owner_term, place = body.args
        owner = T.Atom(rec.agent)
        place_concept = T.concept_of(place, sess.kb.ontology)
        for entry_concept, template, prior in sess.normal_activities:
            if sess.kb.ontology.compatible(place_concept, entry_concept) is None:
                continue
            sess.memo.add(key)
            prim, _ = T.standardize_apart(template)
            mapping = {}
            for role, val in prim.args:
                if isinstance(val, T.Var):
                    if val.concept != T.TOP and \
                            sess.kb.ontology.compatible(val.concept, place_concept):
                        mapping[val.name] = place
                    elif sess.kb.ontology.compatible(
                            val.concept, T.concept_of(owner_term, sess.kb.ontology)):
                        mapping[val.name] = owner_term
            instance = T.substitute(prim, mapping)
            if _intend_exists(sess, instance):
                break
            executor = instance.arg("agent")
            executor = executor if not isinstance(executor, T.Var) else owner
            prob = rec.prob * sess.decay * Decimal(str(prior))
            ids = derive(sess, T.Intend(owner, occurrence(executor, instance)),
                         "normal_activity", (rec.rid,), prob)
            new.extend(ids)
            break
    return new


def rule_negative_state(sess) -> list:
    """An agent in a negative state is taken to want the positive one."""
    new = []
    for rec in list(sess.kb.active_records("bel")):
        if rec.status != ACTIVE:
            continue
        key = ("negative_state", rec.rid)
        if key in sess.memo:
            continue
        f = rec.formula
        if not isinstance(f, T.Bel):
            continue
        for neg_pat, pos_pat in sess.state_pairs:
            neg, ren = T.standardize_apart(neg_pat)
            env = unify(f.body, neg, ontology=sess.kb.ontology)
            if env is None:
                continue
            sess.memo.add(key)
            pos, _ = T.standardize_apart(pos_pat, ren)
            ids = derive(sess, T.PGoal(f.agent, env.deep(pos)), "negative_state",
                         (rec.rid,), rec.prob * sess.decay)
            new.extend(ids)
            break
    return new


RECOGNITION_RULES = (
    rule_act_effect,
    rule_precondition_act,
    rule_body_action,
    rule_knowif_exists,
    rule_val_action,
    rule_knowif_action,
    rule_normal_activity,
    rule_negative_state,
)


def recognition_fixpoint(sess) -> list:
    created = []
    for _ in range(50):
        before = len(created)
        for rule in RECOGNITION_RULES:
            created.extend(rule(sess))
        if len(created) == before:
            break
        if sess.new_this_turn >= 500:
            sess.diagnostics.append("recognition stopped at record cap")
            break
    else:
        sess.diagnostics.append("recognition iteration cap reached")
    return created


# ---------------------------------------------------------------------------
# obstacles and confirmation
# ---------------------------------------------------------------------------


def detect_obstacles(sess) -> list:
    """Survey the user's inferred plan for conditions the system should
    help with.  Returns (record id, obstacle kind) diagnostics."""
    found = []
    for rec in intend_records(sess, include_blocked=True):
        if rec.agent == sess.system.name or below_threshold(sess, rec):
            continue
        prim = _prim_of(rec)
        if prim is None or not sess.registry.known(prim.name) or is_speech_act(prim.name):
            continue
        if rec.status == BLOCKED:
            found.append((rec.rid, "applicability-unknown"))
        instance = sess.kb.resolve(prim)
        owner = T.Atom(rec.agent)
        pre = sess.registry.precondition(instance)
        for i, conjunct in enumerate(pre.parts if isinstance(pre, T.And) else (pre,)):
            if not isinstance(conjunct, (T.KnowRef, T.KnowIf)):
                continue
            if conjunct.agent != owner:
                continue
            key = ("obstacle_knowledge", rec.rid, i)
            if key in sess.memo:
                continue
            if sess.kb.prove_first(conjunct) is not None:
                continue
            sess.memo.add(key)
            found.append((rec.rid, "missing-knowledge"))
            derive(sess, T.PGoal(sess.system, conjunct), "helpful_knowledge",
                   (rec.rid,), rec.prob * sess.decay)
    return found


RECOGNITION_RULE_NAMES = {
    "act_effect", "precondition_act", "body_action", "knowif_exists",
    "val_action", "knowif_action", "normal_activity", "negative_state",
}


def maybe_confirm_intention(sess) -> int | None:
    """When the best explanation of the user's act is still a guess, ask.

    Only recognition-inferred records qualify: a low prior on a deep
    planning expansion is not a doubt about what the user meant.
    """
    candidates = [
        rec for rec in sess.kb.active_records()
        if rec.agent != sess.system.name
        and rec.kind in ("pgoal", "intend")
        and rec.status == ACTIVE
        and rec.prob < sess.threshold
        and ("confirm_goal", rec.rid) not in sess.memo
        and "internal" not in rec.flags
        and any(r.rule in RECOGNITION_RULE_NAMES for r in rec.reasons)
    ]
    if not candidates:
        return None
    rec = min(candidates, key=lambda r: (r.prob, r.rid))
    sess.memo.add(("confirm_goal", rec.rid))
    owner = T.Atom(rec.agent)
    if isinstance(rec.formula, T.Intend):
        content = T.PGoal(owner, T.DoneF(rec.formula.occ))
    else:
        content = T.PGoal(owner, rec.formula.body)
    ids = derive(sess, T.PGoal(sess.system, T.KnowIf(sess.system, content)),
                 "confirm_intention", (), T.ONE)
    for rid in ids:
        sess.graph.add_edge("relativized-to", rid, rec.rid)
    return ids[0] if ids else None

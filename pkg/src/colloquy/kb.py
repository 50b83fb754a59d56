"""Per-session modal knowledge store and its two meta-interpreters.

A ``KnowledgeBase`` owns every stored mental-state record for one
dialogue: system facts, attributed beliefs, persistent goals, intentions,
done/doing history, defaults, and Horn rules (own and attributed).

Two interpreters operate over it:

* ``prove`` answers queries backward (fact lookup, Horn back-chaining,
  modal introspection rules, attributed-rule reasoning, normal defaults
  with negation-as-failure, done-over-combinators, equality resolution);

* ``assert_formula`` pushes every incoming formula through the rewrite
  rules before storage, so the store holds the least-embedded equivalent
  forms and never contains a rewritable left-hand side.

Proof search distinguishes three outcomes: proved, unproven, and unknown
(resource budget exhausted) — a caller planning questions must never
conflate "could not prove" with "proved false".
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from decimal import Decimal

from . import terms as T
from .equalities import EquivalenceStore
from .ontology import Ontology, base_ontology
from .syntax import canonical, canonical_renamed
from .unify import Subst, unify

DEPTH_BUDGET = 64
STEP_BUDGET = 200_000

PROVED = "proved"
UNPROVEN = "unproven"
UNKNOWN = "unknown"

ACTIVE = "active"
BLOCKED = "blocked"
SATISFIED = "satisfied"
IMPOSSIBLE = "impossible"
RETRACTED = "retracted"

GOAL_KINDS = {"pgoal", "intend", "knowif-goal", "knowref-goal"}


class _Exhausted(Exception):
    pass


@dataclass
class Reason:
    rule: str
    parents: tuple = ()
    prob: Decimal = T.ONE
    turn: int = 0


@dataclass
class Record:
    rid: int
    formula: object
    kind: str
    agent: str
    status: str = ACTIVE
    prob: Decimal = T.ONE
    reasons: list = field(default_factory=list)
    turn: int = 0
    created: int = 0
    flags: set = field(default_factory=set)
    block_info: tuple | None = None  # ("ac", formula) or ("offer", want-formula)

    @property
    def is_goal(self) -> bool:
        return self.kind in GOAL_KINDS

    def parent_ids(self):
        out = []
        for r in self.reasons:
            out.extend(r.parents)
        return out


@dataclass
class HornRule:
    head: object
    body: tuple
    agent: str | None = None  # None = system's own rule; else attributed


def record_kind(f) -> str:
    if isinstance(f, T.Intend):
        return "intend"
    if isinstance(f, T.PGoal):
        if isinstance(f.body, T.KnowIf):
            return "knowif-goal"
        if isinstance(f.body, T.KnowRef):
            return "knowref-goal"
        return "pgoal"
    if isinstance(f, T.Bel):
        return "bel"
    if isinstance(f, (T.KnowIf, T.KnowRef)):
        return "bel"
    if isinstance(f, T.DoneF):
        return "done"
    if isinstance(f, T.DoingF):
        return "doing"
    if isinstance(f, T.Default):
        return "default"
    return "fact"


def record_agent(f) -> str:
    if isinstance(f, (T.Bel, T.PGoal, T.Intend, T.KnowIf, T.KnowRef, T.GoalF)):
        a = f.agent
        return a.name if isinstance(a, T.Atom) else canonical(a)
    if isinstance(f, (T.DoneF, T.DoingF, T.DoF)):
        a = f.occ.act.agent
        return a.name if isinstance(a, T.Atom) else canonical(a)
    return "sys"


@dataclass
class AssertResult:
    ids: list
    renaming: dict


class KnowledgeBase:
    def __init__(self, ontology: Ontology | None = None, system: str = "sys"):
        self.ontology = ontology or base_ontology()
        self.system = system
        self.records: dict[int, Record] = {}
        self.rules: list[HornRule] = []
        self.defaults: list[Record] = []
        self.equalities = EquivalenceStore()
        self.revision_log: list[tuple] = []
        self.rewrite_trace: list[tuple] = []  # (rule name, before measure, after measure)
        self.closed_world: set[str] = set()
        self.trusted: set[str] = set()
        self._ids = itertools.count(1)
        self._by_canon: dict[str, int] = {}
        self.turn = 0
        self.belief_floor = Decimal(0)  # attributed states below this do not prove
        self.reason_hook = None  # set by the executive: act term -> reason formula
        self.last_outcome_unknown = False
        self.equalities.on_constant(self._constant_joined)
        self._in_const_rewrite = False

    # ------------------------------------------------------------------
    # storage
    # ------------------------------------------------------------------

    def add_rule(self, head, body, agent: str | None = None):
        self.rules.append(HornRule(head, tuple(body), agent))

    def assert_formula(self, f, rule: str = "stated", parents: tuple = (),
                       prob: Decimal = T.ONE, flags=(), standardize: bool = True) -> AssertResult:
        """Rewrite ``f`` to normal form and store the resulting records.

        Fresh variable copies are linked back to their source variables
        before rewriting, so a variable whose class already resolved to a
        constant collapses on the way in.
        """
        renaming: dict = {}
        if standardize:
            f, renaming = T.standardize_apart(f)
        self._register_scopes(f)
        for old, newv in renaming.items():
            if self.equalities.known(T.Var(old)):
                self.add_equality(T.Var(old), newv)
        ids: list[int] = []
        for piece in self._normalize(f):
            rid = self._store(piece, rule, parents, prob, set(flags))
            if rid is not None:
                ids.append(rid)
        return AssertResult(ids, renaming)

    def _normalize(self, f):
        """Apply the assertion rewrite rules to fixpoint; yield final pieces."""
        queue = [f]
        while queue:
            g = queue.pop(0)
            if isinstance(g, T.And):
                queue = list(g.parts) + queue
                continue
            if isinstance(g, T.Bel) and self._is_sys(g.agent):
                queue.insert(0, g.body)
                continue
            if isinstance(g, T.Exists):
                # free variables are quantified in; drop the explicit binder
                queue.insert(0, g.body)
                continue
            if isinstance(g, T.PGoal) and isinstance(g.body, T.DoneF):
                # a goal to have done an action is an intention
                queue.insert(0, T.Intend(g.agent, g.body.occ, g.rel, g.prob))
                continue
            hit = self._rewrite_step(g)
            if hit is not None:
                queue = list(hit) + queue
                continue
            deep = self._deep_normalize(g)
            if deep != g:
                queue.insert(0, deep)  # inner rewrites may expose top-level ones
                continue
            yield g

    def _deep_normalize(self, f):
        """Apply the rewrite rules inside nested positions too; a rule that
        splits its input becomes an inline conjunction there."""
        def walk(n):
            if isinstance(n, T.Var):
                return n
            n2 = T.map_node(n, walk)
            if isinstance(n2, (T.Bel, T.KnowRef, T.PGoal)):
                out = self._rewrite_step(n2)
                if out is not None:
                    outs = [walk(o) for o in out]
                    return outs[0] if len(outs) == 1 else T.conj(outs)
            return n2
        return walk(f)

    def _rewrite_step(self, g):
        """One application of the assertion rewrite rules, or None."""
        out = None
        name = None
        if isinstance(g, T.Bel):
            b = g.body
            if isinstance(b, T.Bel) and _same_agent(g.agent, b.agent):
                name, out = "bel-bel", [T.Bel(g.agent, b.body, g.prob)]
            elif isinstance(b, T.And):
                name, out = "bel-and", [T.Bel(g.agent, p, g.prob) for p in b.parts]
            elif isinstance(b, T.KnowRef) and _same_agent(g.agent, b.agent):
                name, out = "bel-knowref", [T.KnowRef(b.agent, b.var, b.body)]
            elif isinstance(b, T.PGoal) and _same_agent(g.agent, b.agent):
                name, out = "bel-pgoal", [b]
        elif isinstance(g, T.KnowRef):
            if isinstance(g.body, T.Bel) and _same_agent(g.agent, g.body.agent):
                name, out = "knowref-bel", [T.KnowRef(g.agent, g.var, g.body.body)]
            else:
                c = self.equalities.resolve(g.var)
                if not isinstance(c, T.Var):
                    name = "knowref-constant"
                    out = [T.Bel(g.agent, T.substitute(g.body, {g.var.name: c}))]
        elif isinstance(g, T.PGoal):
            b = g.body
            if isinstance(b, T.And):
                name, out = "pgoal-and", [T.PGoal(g.agent, p, g.rel, g.prob) for p in b.parts]
            elif isinstance(b, T.PGoal) and _same_agent(g.agent, b.agent):
                name, out = "pgoal-pgoal", [T.PGoal(g.agent, b.body, b.rel or g.rel, g.prob)]
            elif isinstance(b, T.Intend) and _same_agent(g.agent, b.agent):
                name, out = "pgoal-intend", [T.Intend(g.agent, b.occ, b.rel or g.rel, g.prob)]
            elif isinstance(b, T.KnowRef) and _same_agent(g.agent, b.agent):
                c = self.equalities.resolve(b.var)
                if not isinstance(c, T.Var):
                    name = "pgoal-knowref-constant"
                    inner = T.substitute(b.body, {b.var.name: c})
                    out = [T.PGoal(g.agent, T.Bel(b.agent, inner), g.rel, g.prob)]
            if out is None and isinstance(b, T.KnowIf) and isinstance(b.body, T.And):
                name = "pgoal-knowif-and"
                out = [T.PGoal(g.agent, T.KnowIf(b.agent, p), g.rel, g.prob)
                       for p in b.body.parts]
        if out is None:
            return None
        before = T.measure(g)
        for piece in out:
            self.rewrite_trace.append((name, before, T.measure(piece)))
        return out

    def _store(self, f, rule, parents, prob, flags):
        if f == T.TRUE:
            return None
        if isinstance(f, T.Equal):
            self.add_equality(f.left, f.right)
            return None
        if isinstance(f, T.Default):
            rec = self._new_record(f, "default", rule, parents, prob, flags)
            self.defaults.append(rec)
            return rec.rid
        self._revise_contradiction(f)
        canon = canonical_renamed(self.equalities.resolve_term(f))
        kind = record_kind(f)
        existing = self._by_canon.get(kind + "|" + canon)
        if existing is not None:
            rec = self.records[existing]
            if rec.status in (ACTIVE, BLOCKED):
                reason = Reason(rule, tuple(parents), prob, self.turn)
                rec.reasons.append(reason)
                if prob > rec.prob:
                    rec.prob = prob
                self._link_variant_vars(rec.formula, f)
                self.revision_log.append(("merge", rec.rid, self.turn, rule, canon))
                return rec.rid
        rec = self._new_record(f, kind, rule, parents, prob, flags)
        self._by_canon[kind + "|" + canon] = rec.rid
        return rec.rid

    def _new_record(self, f, kind, rule, parents, prob, flags):
        rid = next(self._ids)
        rec = Record(
            rid=rid, formula=f, kind=kind, agent=record_agent(f), prob=prob,
            reasons=[Reason(rule, tuple(parents), prob, self.turn)], turn=self.turn,
            created=rid, flags=set(flags),
        )
        self.records[rid] = rec
        self.revision_log.append(("assert", rid, self.turn, rule, canonical(f)))
        return rec

    def _link_variant_vars(self, stored, incoming):
        env = unify(stored, incoming, ontology=self.ontology)
        if env is None:
            return
        for name, val in env.items():
            a = T.Var(name)
            b = env.walk(a)
            if isinstance(b, T.Var) and b.name != name:
                self.equalities.merge(T.Var(name), b)
            elif not isinstance(b, T.Var):
                self.equalities.merge(T.Var(name), b)

    def _revise_contradiction(self, f):
        """Newest assertion wins a direct literal contradiction."""
        if T.free_vars(f):
            return
        if isinstance(f, T.Bel):
            inner = f.body
            flipped = inner.body if isinstance(inner, T.Not) else T.Not(inner)
            key = "bel|" + canonical_renamed(T.Bel(f.agent, flipped))
        elif isinstance(f, (T.Pred, T.Not)):
            flipped = f.body if isinstance(f, T.Not) else T.Not(f)
            key = "fact|" + canonical_renamed(flipped)
        else:
            return
        rid = self._by_canon.get(key)
        if rid is not None and self.records[rid].status == ACTIVE:
            self.retract_record(rid, note="revision")

    def _register_scopes(self, f, chain: tuple = ()):  # modal agent chain
        """Record each variable's modal scope for equality guarding.

        Knowref and such-that binders are quantified in by definition —
        the value lives at the planner's level, outside every belief — so
        they register with the empty scope regardless of nesting.  An
        explicit existential inside a modal operator stays scoped to that
        operator chain and will refuse to merge across it.
        """
        if isinstance(f, T.MODAL_TYPES):
            agent = f.agent
            tag = agent.name if isinstance(agent, T.Atom) else "?"
            inner_chain = chain + (tag,)
            if isinstance(f, T.KnowRef):
                self.equalities.register(f.var, ())
                self._register_scopes(f.body, inner_chain)
                return
            for c in T.children(f):
                if c is not f.agent:
                    self._register_scopes(c, inner_chain)
            return
        if isinstance(f, T.Descr):
            self.equalities.register(f.var, ())
            self._register_scopes(f.body, chain)
            return
        if isinstance(f, T.Exists):
            self.equalities.register(f.var, chain)
            self._register_scopes(f.body, chain)
            return
        if isinstance(f, T.Var):
            self.equalities.register(f, ())
            return
        for c in T.children(f):
            self._register_scopes(c, chain)

    # ------------------------------------------------------------------
    # equality
    # ------------------------------------------------------------------

    def add_equality(self, a, b, scope: tuple = ()):
        a = self.equalities.resolve(a)
        b = self.equalities.resolve(b)
        return self.equalities.merge(a, b, scope)

    def _constant_joined(self, constant):
        """A class gained a constant: renormalize records it appears in."""
        if self._in_const_rewrite:
            return
        self._in_const_rewrite = True
        try:
            for rec in list(self.records.values()):
                if rec.status not in (ACTIVE, BLOCKED):
                    continue
                resolved = self.equalities.resolve_term(rec.formula)
                if resolved == rec.formula:
                    continue
                pieces = list(self._normalize(resolved))
                # rewrite in place only while the record stays what it was;
                # a knowref belief collapsing into something else entirely
                # is left alone — the prover resolves through the classes
                if len(pieces) == 1 and record_kind(pieces[0]) == rec.kind:
                    old_key = rec.kind + "|" + canonical_renamed(self.equalities.resolve_term(rec.formula))
                    self._by_canon.pop(old_key, None)
                    rec.formula = pieces[0]
                    self._by_canon[rec.kind + "|" + canonical_renamed(pieces[0])] = rec.rid
                    self.revision_log.append(
                        ("rewrite", rec.rid, self.turn, "equality", canonical(pieces[0])))
        finally:
            self._in_const_rewrite = False

    def resolve(self, node):
        return self.equalities.resolve_term(node)

    # ------------------------------------------------------------------
    # retraction
    # ------------------------------------------------------------------

    def retract_record(self, rid: int, note: str = "retract") -> set:
        """Retract ``rid`` and cascade through dependents without other support."""
        if rid not in self.records:
            return set()
        rec = self.records[rid]
        if rec.status == RETRACTED:
            return set()
        removed = {rid}
        self._set_status(rec, RETRACTED, note)
        removed |= self.sweep_unsupported(note=f"cascade:{rid}")
        return removed

    def sweep_unsupported(self, note: str = "unsupported") -> set:
        """Drop active/blocked records whose every reason lost a parent.

        A reason supports its record only while all parents are active or
        blocked; records asserted without parents are roots and permanent.
        """
        removed = set()
        changed = True
        while changed:
            changed = False
            for rec in list(self.records.values()):
                if rec.status not in (ACTIVE, BLOCKED):
                    continue
                if not rec.reasons:
                    continue
                supported = False
                for reason in rec.reasons:
                    if not reason.parents:
                        supported = True
                        break
                    if all(
                        self.records[p].status in (ACTIVE, BLOCKED, SATISFIED)
                        if not self.records[p].is_goal
                        else self.records[p].status in (ACTIVE, BLOCKED)
                        for p in reason.parents if p in self.records
                    ):
                        supported = True
                        break
                if not supported:
                    self._set_status(rec, RETRACTED, note)
                    removed.add(rec.rid)
                    changed = True
        return removed

    def _set_status(self, rec: Record, status: str, note: str = ""):
        if rec.status in (SATISFIED, IMPOSSIBLE, RETRACTED) and status == ACTIVE:
            raise ValueError(f"record {rec.rid} cannot re-activate from {rec.status}")
        rec.status = status
        self.revision_log.append((status, rec.rid, self.turn, note, canonical(rec.formula)))
        if status == RETRACTED:
            self._by_canon.pop(
                rec.kind + "|" + canonical_renamed(self.equalities.resolve_term(rec.formula)),
                None)

    def set_status(self, rid: int, status: str, note: str = "", sweep: bool = True):
        self._set_status(self.records[rid], status, note)
        if sweep and status in (SATISFIED, IMPOSSIBLE, RETRACTED):
            self.sweep_unsupported(note=f"irrelevant:{rid}")

    # ------------------------------------------------------------------
    # proving
    # ------------------------------------------------------------------

    def _is_sys(self, agent) -> bool:
        return isinstance(agent, T.Atom) and agent.name == self.system

    def prove_all(self, goal, env: Subst | None = None, limit: int | None = None,
                  depth: int = DEPTH_BUDGET):
        self.last_outcome_unknown = False
        out = []
        budget = [STEP_BUDGET]
        try:
            for sol in self._prove(goal, env or Subst(), depth, budget, ()):
                out.append(sol)
                if limit is not None and len(out) >= limit:
                    break
        except _Exhausted:
            self.last_outcome_unknown = True
        return out

    def prove_first(self, goal, env: Subst | None = None, depth: int = DEPTH_BUDGET):
        sols = self.prove_all(goal, env, limit=1, depth=depth)
        return sols[0] if sols else None

    def prove_outcome(self, goal) -> str:
        sol = self.prove_first(goal)
        if sol is not None:
            return PROVED
        return UNKNOWN if self.last_outcome_unknown else UNPROVEN

    def provable(self, goal) -> bool:
        return self.prove_first(goal) is not None

    def _spend(self, budget):
        budget[0] -= 1
        if budget[0] <= 0:
            raise _Exhausted()

    def _prove(self, goal, env, depth, budget, path):
        """Backward meta-interpreter. Yields extended substitutions."""
        self._spend(budget)
        if depth <= 0:
            raise _Exhausted()
        goal = env.deep(goal)
        goal = self.equalities.resolve_term(goal)
        if isinstance(goal, T.Compound):
            # the textual syntax cannot tell a nested predicate from a
            # compound term; proving one means reading it as a predicate
            goal = T.Pred(goal.functor, goal.positional())
        goal = self._deep_normalize(goal)  # queries meet the store's normal form
        if goal == T.TRUE:
            yield env
            return
        if goal == T.FALSE:
            return
        key = canonical_renamed(goal)
        if key in path:
            return
        path = path + (key,)

        if isinstance(goal, T.And):
            yield from self._prove_seq(goal.parts, env, depth, budget, path)
            return
        if isinstance(goal, T.Or):
            yield from self._lookup(goal, env)  # disjunctions stored whole
            for part in goal.parts:
                yield from self._prove(part, env, depth - 1, budget, path)
            return
        if isinstance(goal, T.Exists):
            yield from self._prove(goal.body, env, depth - 1, budget, path)
            return
        if isinstance(goal, T.Equal):
            e = unify(goal.left, goal.right, env, self.ontology)
            if e is not None:
                yield e
            return
        if isinstance(goal, T.Not):
            yield from self._prove_not(goal, env, depth, budget, path)
            return
        if isinstance(goal, T.Descr):
            yield from self._prove(goal.body, env, depth - 1, budget, path)
            return

        if isinstance(goal, T.Pred):
            if goal.name == "isa":
                yield from self._prove_isa(goal, env)
                return
            if goal.name == "reason_of" and self.reason_hook is not None:
                yield from self._prove_reason(goal, env)
                return
            ev = self._evaluate(goal, env)
            if ev is not None:
                if ev is not False:
                    yield ev if isinstance(ev, Subst) else env
                return
            yield from self._prove_second_order(goal, env, depth, budget, path)
            yield from self._lookup(goal, env)
            for rule in self.rules:
                if rule.agent is not None:
                    continue
                head, body, _ = self._fresh_rule(rule)
                e = unify(goal, head, env, self.ontology)
                if e is not None:
                    yield from self._prove_seq(body, e, depth - 1, budget, path)
            yield from self._prove_default(goal, env, depth, budget, path)
            return

        if isinstance(goal, T.Bel):
            yield from self._prove_bel(goal, env, depth, budget, path)
            return
        if isinstance(goal, T.GoalF):
            yield from self._lookup(goal, env)
            # chosen worlds include what is believed (realism)
            yield from self._prove(T.Bel(goal.agent, goal.body), env, depth - 1, budget, path)
            yield from self._prove(T.PGoal(goal.agent, goal.body), env, depth - 1, budget, path)
            return
        if isinstance(goal, T.PGoal):
            yield from self._lookup(goal, env)
            body = goal.body
            if isinstance(body, T.DoneF):
                alt = T.Intend(goal.agent, body.occ, goal.rel)
                yield from self._lookup(alt, env)
            if isinstance(body, T.And):
                parts = [T.PGoal(goal.agent, p, goal.rel) for p in body.parts]
                yield from self._prove_seq(parts, env, depth - 1, budget, path)
            # mirrors of the assertion rewrites: the store holds the
            # least-embedded form, so prove the embedded query through it
            if isinstance(body, T.PGoal) and _same_agent(goal.agent, body.agent):
                yield from self._prove(body, env, depth - 1, budget, path)
            if isinstance(body, T.Intend) and _same_agent(goal.agent, body.agent):
                yield from self._prove(body, env, depth - 1, budget, path)
            if isinstance(body, T.KnowIf) and isinstance(body.body, T.And):
                parts = [T.PGoal(goal.agent, T.KnowIf(body.agent, p), goal.rel)
                         for p in body.body.parts]
                yield from self._prove_seq(parts, env, depth - 1, budget, path)
            if isinstance(body, T.KnowRef) and _same_agent(goal.agent, body.agent):
                c = self.equalities.resolve(body.var)
                if not isinstance(c, T.Var):
                    inner = T.substitute(body.body, {body.var.name: c})
                    yield from self._prove(
                        T.PGoal(goal.agent, T.Bel(body.agent, inner), goal.rel),
                        env, depth - 1, budget, path)
            yield from self._prove_default(goal, env, depth, budget, path)
            return
        if isinstance(goal, T.Intend):
            yield from self._lookup(goal, env)
            yield from self._prove_default(goal, env, depth, budget, path)
            return
        if isinstance(goal, T.KnowIf):
            yield from self._lookup(goal, env)
            found = False
            for sol in self._prove(T.Bel(goal.agent, goal.body), env, depth - 1, budget, path):
                found = True
                yield sol
            if not found:
                neg = goal.body.body if isinstance(goal.body, T.Not) else T.Not(goal.body)
                yield from self._prove(T.Bel(goal.agent, neg), env, depth - 1, budget, path)
            for rule in self.rules:
                if rule.agent is not None or not isinstance(rule.head, T.KnowIf):
                    continue
                head, body, _ = self._fresh_rule(rule)
                e = unify(goal, head, env, self.ontology)
                if e is not None:
                    yield from self._prove_seq(body, e, depth - 1, budget, path)
            yield from self._prove_default(goal, env, depth, budget, path)
            return
        if isinstance(goal, T.KnowRef):
            yield from self._lookup(goal, env)
            yield from self._prove_default(goal, env, depth, budget, path)
            # quantified in: some value the agent believes satisfies the
            # body — and knowing-which demands an actual witness, not an
            # unconstrained variable
            for sol in self._prove(T.Bel(goal.agent, goal.body), env,
                                   depth - 1, budget, path):
                witness = self.equalities.resolve_term(sol.deep(goal.var))
                if not isinstance(witness, T.Var):
                    yield sol
            return
        if isinstance(goal, T.DoneF):
            yield from self._prove_done(goal, env, depth, budget, path)
            return
        if isinstance(goal, (T.DoF, T.DoingF)):
            yield from self._lookup(goal, env)
            return
        if isinstance(goal, (T.Failed, T.Impossible, T.Eventually, T.Always, T.Before)):
            yield from self._lookup(goal, env)
            return
        if isinstance(goal, T.Blocked):
            inner = goal.body
            if isinstance(inner, T.Intend):
                for rec in self.records.values():
                    if rec.kind == "intend" and rec.status == BLOCKED:
                        e = unify(inner, rec.formula, env, self.ontology)
                        if e is not None:
                            yield e
            return
        if isinstance(goal, T.Default):
            for rec in self.defaults:
                pattern, _ = T.standardize_apart(rec.formula.body)
                e = unify(goal.body, pattern, env, self.ontology)
                if e is not None:
                    yield e
            return
        if isinstance(goal, T.Var):
            return
        raise TypeError(f"cannot prove {goal!r}")

    def _prove_seq(self, goals, env, depth, budget, path):
        if not goals:
            yield env
            return
        first, rest = goals[0], goals[1:]
        for e in self._prove(first, env, depth - 1, budget, path):
            yield from self._prove_seq(rest, e, depth, budget, path)

    def _prove_not(self, goal, env, depth, budget, path):
        body = env.deep(goal.body)
        # explicit negative records
        yield from self._lookup(goal, env)
        if isinstance(body, T.And):
            # a conjunction is false whenever one conjunct is
            for part in body.parts:
                yield from self._prove_not(T.Not(part), env, depth - 1, budget, path)
            return
        ev = self._evaluate(body, env) if isinstance(body, T.Pred) else None
        if ev is not None:
            if ev is False:
                yield env
            return
        if not isinstance(body, (T.Pred, T.Equal, T.DoneF)):
            return  # negated modal states require explicit records
        # negation as failure only where the store is declared complete;
        # elsewhere failing to prove P never establishes ~P
        if isinstance(body, T.Pred) and body.name not in self.closed_world:
            return
        sub_budget = [min(budget[0], STEP_BUDGET // 4)]
        try:
            for _ in self._prove(body, env, depth - 1, sub_budget, path):
                return
        except _Exhausted:
            raise _Exhausted()  # cannot decide: poison, do not treat as false
        yield env

    def _prove_bel(self, goal, env, depth, budget, path):
        agent, body = goal.agent, goal.body
        if self._is_sys(agent):
            yield from self._prove(body, env, depth - 1, budget, path)
            return
        yield from self._lookup(goal, env)
        if isinstance(body, T.Bel) and _same_agent(agent, body.agent):
            yield from self._prove(T.Bel(agent, body.body), env, depth - 1, budget, path)
        elif isinstance(body, T.And):
            yield from self._prove_seq(
                [T.Bel(agent, p) for p in body.parts], env, depth - 1, budget, path)
        elif isinstance(body, T.Or):
            for p in body.parts:
                yield from self._prove(T.Bel(agent, p), env, depth - 1, budget, path)
        elif isinstance(body, T.PGoal) and _same_agent(agent, body.agent):
            yield from self._prove(body, env, depth - 1, budget, path)
        elif isinstance(body, T.KnowRef) and _same_agent(agent, body.agent):
            inner = body.body
            if isinstance(inner, T.And) and len(inner.parts) == 2:
                # knowref over a constrained description: know the core,
                # verify the side condition
                core, cond = inner.parts
                yield from self._prove_seq(
                    [T.KnowRef(agent, body.var, core), cond], env, depth - 1, budget, path)
            yield from self._prove(body, env, depth - 1, budget, path)
        if isinstance(body, T.Pred):
            # evaluable truths hold in every agent's belief worlds
            if body.name == "isa":
                yield from self._prove_isa(body, env)
            elif self._evaluate(body, env) is True:
                yield env
        # attributed Horn-clause reasoning
        for rule in self.rules:
            if rule.agent is None:
                continue
            if not (isinstance(agent, T.Atom) and agent.name == rule.agent):
                continue
            head, rbody, _ = self._fresh_rule(rule)
            e = unify(body, head, env, self.ontology)
            if e is not None:
                yield from self._prove_seq(
                    [T.Bel(agent, b) for b in rbody], e, depth - 1, budget, path)
        yield from self._prove_default(goal, env, depth, budget, path)

    def _prove_default(self, goal, env, depth, budget, path):
        """Normal defaults: default(P), P not a negation, ~P not provable."""
        if isinstance(goal, T.Not):
            return
        for rec in self.defaults:
            pattern, _ = T.standardize_apart(rec.formula.body)
            e = unify(goal, pattern, env, self.ontology)
            if e is None:
                continue
            inst = e.deep(goal)
            neg = T.Not(inst)
            blocked = False
            for _ in self._prove_explicit_negation(neg, Subst(), depth - 1, budget, path):
                blocked = True
                break
            if not blocked:
                yield e

    def _prove_explicit_negation(self, neg, env, depth, budget, path):
        """Proof of ~P from explicit negative records or evaluation only."""
        yield from self._lookup(neg, env)
        body = neg.body
        if isinstance(body, T.Pred):
            ev = self._evaluate(body, env)
            if ev is False:
                yield env
        if isinstance(body, T.And):
            # ~ (P & Q) holds when some conjunct is explicitly false
            for p in body.parts:
                yield from self._prove_explicit_negation(T.Not(p), env, depth - 1, budget, path)

    def _prove_done(self, goal, env, depth, budget, path):
        occ = goal.occ
        expr = occ.act.expr
        if isinstance(expr, (T.PrimAct, T.Var)):
            yield from self._lookup(goal, env)
            return
        if isinstance(expr, T.DisjAct):
            for branch in (expr.left, expr.right):
                sub = T.DoneF(T.Occurrence(
                    T.ActionRef(occ.act.agent, branch, occ.act.constraint),
                    occ.location, occ.time))
                yield from self._prove(sub, env, depth - 1, budget, path)
            return
        if isinstance(expr, T.ConditAct):
            sub = T.DoneF(T.Occurrence(
                T.ActionRef(occ.act.agent, expr.body, occ.act.constraint),
                occ.location, occ.time))
            yield from self._prove_seq([expr.cond, sub], env, depth - 1, budget, path)
            return
        if isinstance(expr, T.SeqAct):
            goals = []
            for i, part in enumerate(expr.parts):
                loc = T.Var(T.fresh_name("Loc"))
                tm = T.Var(T.fresh_name("Time"))
                if i == len(expr.parts) - 1:
                    loc, tm = occ.location, occ.time
                goals.append(T.DoneF(T.Occurrence(
                    T.ActionRef(occ.act.agent, part, occ.act.constraint), loc, tm)))
            yield from self._prove_seq(goals, env, depth - 1, budget, path)
            return
        return

    def _fresh_rule(self, rule: HornRule):
        head, ren = T.standardize_apart(rule.head)
        body = tuple(T.standardize_apart(b, ren)[0] for b in rule.body)
        return head, body, ren

    def _lookup(self, goal, env):
        for rec in self.records.values():
            if rec.status == RETRACTED:
                continue
            if rec.is_goal and rec.status not in (ACTIVE, BLOCKED):
                continue  # a satisfied or impossible goal is no longer held
            if rec.kind == "doing" and rec.status != ACTIVE:
                continue
            if rec.agent != self.system and rec.prob < self.belief_floor:
                continue  # an unconfirmed guess about another agent is not proof
            stored = self.equalities.resolve_term(rec.formula)
            if type(stored) is not type(goal):
                continue
            if isinstance(goal, (T.DoneF, T.DoF, T.DoingF)):
                # history matches one way only: what actually happened may
                # instantiate the query, never the other way around
                stored = _freeze_vars(stored)
            e = unify(goal, stored, env, self.ontology)
            if e is not None:
                yield e

    # ------------------------------------------------------------------
    # evaluable predicates
    # ------------------------------------------------------------------

    def _prove_reason(self, pred: T.Pred, env):
        """(reason_of <act> R): R is the plan-derived reason for the act."""
        if len(pred.args) != 2:
            return
        act_term = self.equalities.resolve_term(env.deep(pred.args[0]))
        reason = self.reason_hook(act_term)
        if reason is None:
            return
        e = unify(pred.args[1], reason, env, self.ontology)
        if e is not None:
            yield e

    def _prove_isa(self, pred: T.Pred, env):
        if len(pred.args) != 2:
            return
        thing, concept = (self.equalities.resolve_term(env.deep(a)) for a in pred.args)
        if not isinstance(concept, T.Atom):
            return
        if isinstance(thing, T.Var):
            for name in self.ontology.instances_of(concept.name):
                e = unify(thing, T.Atom(name), env, self.ontology)
                if e is not None:
                    yield e
            return
        c = T.concept_of(thing, self.ontology)
        if self.ontology.is_subconcept(c, concept.name):
            yield env

    def _evaluate(self, pred: T.Pred, env):
        """True/False for ground comparisons, else None."""
        if pred.name not in ("gt", "ge", "lt", "le", "neq"):
            return None
        args = [self.equalities.resolve_term(env.deep(a)) for a in pred.args]
        a, b = args
        ka, kb = _order_key(a), _order_key(b)
        if ka is None or kb is None:
            return None
        return {
            "gt": ka > kb, "ge": ka >= kb, "lt": ka < kb, "le": ka <= kb,
            "neq": ka != kb,
        }[pred.name]

    def _prove_second_order(self, pred: T.Pred, env, depth, budget, path):
        """Superlatives: (earliest V F) / (latest V F) bind V to the extreme
        solution of F."""
        if pred.name not in ("earliest", "latest") or len(pred.args) != 2:
            return
        var, body = pred.args
        var = env.walk(var) if isinstance(var, T.Var) else var
        solutions = []
        for e in self._prove(body, env, depth - 1, budget, path):
            val = e.deep(var) if isinstance(var, T.Var) else var
            val = self.equalities.resolve_term(val)
            k = _order_key(val)
            if k is not None:
                solutions.append((k, val, e))
        if not solutions:
            return
        solutions.sort(key=lambda s: s[0])
        best = solutions[0] if pred.name == "earliest" else solutions[-1]
        if isinstance(var, T.Var):
            e = unify(var, best[1], env, self.ontology)
            if e is not None:
                yield e
        elif _order_key(self.equalities.resolve_term(var)) == best[0]:
            yield env

    # ------------------------------------------------------------------
    # exports
    # ------------------------------------------------------------------

    def snapshot(self) -> str:
        lines = []
        for rec in sorted(self.records.values(), key=lambda r: r.rid):
            if rec.status == RETRACTED:
                continue
            f = self.equalities.resolve_term(rec.formula)
            lines.append(f"({rec.rid} {rec.kind} {rec.agent} {rec.status} "
                         f"{rec.prob} {canonical(f)})")
        return "\n".join(sorted(lines, key=lambda s: int(s.split()[0][1:]))) + "\n"

    def export_revision_log(self) -> str:
        out = []
        for event in self.revision_log:
            kind, rid, turn, rule, formula = event
            out.append(f"(event {kind} {rid} {turn} {rule} {formula})")
        return "\n".join(out) + "\n"

    def active_records(self, kind=None):
        for rec in sorted(self.records.values(), key=lambda r: r.rid):
            if rec.status in (ACTIVE, BLOCKED) and (kind is None or rec.kind == kind):
                yield rec


def _freeze_vars(node):
    """Replace variables by inert markers that unify only with variables."""
    if isinstance(node, T.Var):
        return T.Atom(f"\x00{node.name}")
    if isinstance(node, T.KnowRef):
        return T.KnowRef(_freeze_vars(node.agent), node.var, _freeze_vars(node.body))
    if isinstance(node, T.Exists):
        return T.Exists(node.var, _freeze_vars(node.body))
    if isinstance(node, T.Descr):
        return T.Descr(node.var, _freeze_vars(node.body))
    return T.map_node(node, _freeze_vars)


def _same_agent(a, b) -> bool:
    return a == b


def _order_key(v):
    if isinstance(v, T.Num):
        return (0, v.value)
    if isinstance(v, T.TimeTerm):
        return (1,) + v.sort_key
    if isinstance(v, T.Atom):
        return (2, v.name)
    return None

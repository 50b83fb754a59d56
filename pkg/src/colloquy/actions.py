"""Action descriptions and the registry that serves them to the planners.

An action description pairs a signature (a primitive action pattern with
typed role variables) with its precondition, effect, constraint,
applicability condition, optional hierarchical body, and a note about
who the action benefits.  Applicability conditions differ from
preconditions in that no agent can plan to make them true; a false one
makes the action impossible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import terms as T
from .syntax import canonical
from .unify import Subst, unify


@dataclass
class ActionDescription:
    name: str
    signature: T.PrimAct
    precondition: T.Formula = T.TRUE
    effect: T.Formula = T.TRUE
    constraint: T.Formula = T.TRUE
    applicability: T.Formula = T.TRUE
    body: T.ActionExpr | None = None
    benefits: frozenset = frozenset()
    required: tuple = ()    # role names that must be known before executing
    external: bool = False  # dispatched to a backend system
    prior: float | None = None

    def role_var(self, role):
        return self.signature.arg(role)

    def agent_var(self):
        return self.signature.arg("agent")


class RegistryError(ValueError):
    pass


class ActionRegistry:
    def __init__(self, ontology):
        self.ontology = ontology
        self._actions: dict[str, ActionDescription] = {}
        self._in_body: dict[str, set] = {}

    def register(self, desc: ActionDescription):
        if desc.name in self._actions:
            raise RegistryError(f"action {desc.name} already registered")
        if desc.signature.arg("agent") is None:
            raise RegistryError(f"action {desc.name} lacks an agent role")
        self._actions[desc.name] = desc
        if desc.body is not None:
            for element in _body_elements(desc.body):
                self._in_body.setdefault(element, set()).add(desc.name)

    def get(self, name: str) -> ActionDescription:
        if name not in self._actions:
            raise RegistryError(f"unknown action {name}")
        return self._actions[name]

    def known(self, name: str) -> bool:
        return name in self._actions

    def all(self):
        return list(self._actions.values())

    # ------------------------------------------------------------------
    # instance accessors: instantiate a description against a ground-ish
    # primitive action
    # ------------------------------------------------------------------

    def _field(self, instance: T.PrimAct, field_name: str):
        computed = self._computed_request_field(instance, field_name)
        if computed is not None:
            return computed
        desc = self.get(instance.name)
        sig, ren = T.standardize_apart(desc.signature)
        env = unify(sig, instance, ontology=self.ontology)
        if env is None:
            raise RegistryError(
                f"instance {canonical_act(instance)} does not match signature of {desc.name}")
        renamed, _ = T.standardize_apart(getattr(desc, field_name), ren)
        return env.deep(renamed)

    def _computed_request_field(self, instance: T.PrimAct, field_name: str):
        """A request's conditions come from the act being requested: the
        speaker must believe the embedded act's own conditions hold."""
        if instance.name != "request" or field_name not in (
                "precondition", "applicability", "constraint"):
            return None
        inner = instance.arg("act")
        speaker = instance.arg("agent")
        if not isinstance(inner, T.PrimAct) or not self.known(inner.name):
            return T.TRUE
        inner_field = self._field(inner, field_name)
        if inner_field == T.TRUE:
            return T.TRUE
        return T.Bel(speaker, inner_field)

    def precondition(self, instance: T.PrimAct):
        return self._field(instance, "precondition")

    def effect(self, instance: T.PrimAct):
        return self._field(instance, "effect")

    def constraint(self, instance: T.PrimAct):
        return self._field(instance, "constraint")

    def applicability_condition(self, instance: T.PrimAct):
        return self._field(instance, "applicability")

    def body(self, instance: T.PrimAct):
        desc = self.get(instance.name)
        if desc.body is None:
            return None
        sig, ren = T.standardize_apart(desc.signature)
        env = unify(sig, instance, ontology=self.ontology)
        if env is None:
            raise RegistryError(f"instance does not match signature of {desc.name}")
        body, _ = T.standardize_apart(desc.body, ren)
        return env.deep(body)

    def in_body(self, element_name: str) -> set:
        """Names of actions whose body contains the named element."""
        return set(self._in_body.get(element_name, set()))

    # ------------------------------------------------------------------

    def unknown_obligatory_arguments(self, instance: T.PrimAct, kb, agent,
                                     decider=None) -> list:
        """Required roles still unbound for which ``agent`` lacks knowledge
        of the intended value.

        A role counts as bound when its argument resolves (through the
        equality classes) to a non-variable.  For the rest, the check is
        that the agent lacks knowref of "the value such that the action is
        wanted done with it" — wanted by ``decider`` (the agent whose
        preference fills the slot; defaults to the agent itself).
        """
        desc = self.get(instance.name)
        decider = decider if decider is not None else agent
        out = []
        for role in desc.required:
            val = instance.arg(role)
            if val is None:
                continue
            resolved = kb.resolve(val)
            if not isinstance(resolved, T.Var):
                continue
            occ = T.Occurrence(T.ActionRef(agent, instance, T.TRUE),
                               T.Var(T.fresh_name("Loc")), T.Var(T.fresh_name("Time")))
            wanted = T.KnowRef(agent, resolved, T.PGoal(decider, T.DoneF(occ)))
            if kb.prove_first(wanted) is None:
                out.append((role, resolved))
        return out

    def derive_compound_conditions(self, expr: T.ActionExpr):
        """(precondition, effect) of a compound expression.

        Sequences take the first part's precondition and the last part's
        effect; disjunctions the disjunction of both; a conditional adds
        its test to the precondition.
        """
        if isinstance(expr, T.PrimAct):
            return self.precondition(expr), self.effect(expr)
        if isinstance(expr, T.SeqAct):
            if not expr.parts:
                raise RegistryError("empty action sequence")
            pre, _ = self.derive_compound_conditions(expr.parts[0])
            _, eff = self.derive_compound_conditions(expr.parts[-1])
            return pre, eff
        if isinstance(expr, T.DisjAct):
            pre_l, eff_l = self.derive_compound_conditions(expr.left)
            pre_r, eff_r = self.derive_compound_conditions(expr.right)
            return T.disj([pre_l, pre_r]), T.disj([eff_l, eff_r])
        if isinstance(expr, T.ConditAct):
            pre, eff = self.derive_compound_conditions(expr.body)
            return T.conj([expr.cond, pre]), eff
        raise RegistryError(f"cannot derive conditions for {expr!r}")

    def consistency_warnings(self) -> list:
        """Declared vs body-derived conditions that fail to unify."""
        out = []
        for desc in self._actions.values():
            if desc.body is None:
                continue
            try:
                pre, eff = self.derive_compound_conditions(desc.body)
            except RegistryError:
                continue
            for label, declared, derived in (
                ("precondition", desc.precondition, pre),
                ("effect", desc.effect, eff),
            ):
                if declared == T.TRUE:
                    continue
                if unify(declared, derived, ontology=self.ontology) is None \
                        and not _knowif_equivalent(declared, derived):
                    out.append(f"{desc.name}: declared {label} does not match body-derived form")
        return out


def canonical_act(a: T.PrimAct) -> str:
    from .syntax import print_action_expr
    return print_action_expr(a)


def _body_elements(expr: T.ActionExpr):
    if isinstance(expr, T.PrimAct):
        yield expr.name
    elif isinstance(expr, T.SeqAct):
        for p in expr.parts:
            yield from _body_elements(p)
    elif isinstance(expr, T.ConditAct):
        yield from _body_elements(expr.body)
    elif isinstance(expr, T.DisjAct):
        yield from _body_elements(expr.left)
        yield from _body_elements(expr.right)


def _knowif_equivalent(declared, derived) -> bool:
    """knowif(X, P) is the same state as bel(X,P) v bel(X,~P)."""
    a = _normalize_knowif(declared)
    b = _normalize_knowif(derived)
    return unify(a, b) is not None


def _normalize_knowif(f):
    if isinstance(f, T.Or) and len(f.parts) == 2:
        l, r = f.parts
        if (isinstance(l, T.Bel) and isinstance(r, T.Bel) and l.agent == r.agent):
            lb, rb = l.body, r.body
            if isinstance(rb, T.Not) and rb.body == lb:
                return T.KnowIf(l.agent, lb)
            if isinstance(lb, T.Not) and lb.body == rb:
                return T.KnowIf(l.agent, rb)
    if isinstance(f, T.Bel):
        return _normalize_knowif(f.body)  # planner-perspective wrapper
    return f

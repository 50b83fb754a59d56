"""Unification over terms, formulas, and action expressions.

Occurs check is always on: the engine routinely builds self-referential
goal structures and an unsound binding there is far worse than the cost
of the check.  Typed variables only bind terms whose concept is the
variable's concept or a subconcept of it.
"""

from __future__ import annotations

from .ontology import TOP, Ontology
from . import terms as T


class Subst(dict):
    """Variable-name -> term binding map.  Triangular; use walk()."""

    def walk(self, t):
        while isinstance(t, T.Var) and t.name in self:
            t = self[t.name]
        return t

    def deep(self, node):
        """Fully apply the substitution to a tree.

        A binder slot only ever renames variable-to-variable; a binding to
        a non-variable applies to body occurrences, not the binder itself.
        """
        resolved = self.walk(node) if isinstance(node, T.Var) else node
        if isinstance(resolved, T.Var):
            return resolved
        if isinstance(resolved, (T.KnowRef, T.Exists, T.Descr)):
            nv = self.walk(resolved.var)
            nv = nv if isinstance(nv, T.Var) else resolved.var
            if isinstance(resolved, T.KnowRef):
                return T.KnowRef(self.deep(resolved.agent), nv, self.deep(resolved.body))
            if isinstance(resolved, T.Exists):
                return T.Exists(nv, self.deep(resolved.body))
            return T.Descr(nv, self.deep(resolved.body))
        return T.map_node(resolved, self.deep)

    def copy(self) -> "Subst":
        return Subst(self)


def occurs(name: str, node, env: Subst) -> bool:
    node = env.walk(node) if isinstance(node, T.Var) else node
    if isinstance(node, T.Var):
        return node.name == name
    return any(occurs(name, c, env) for c in T.children(node))


def _bind(var: T.Var, value, env: Subst, ontology: Ontology):
    value = env.walk(value) if isinstance(value, T.Var) else value
    if isinstance(value, T.Var) and value.name == var.name:
        return env
    if occurs(var.name, value, env):
        return None
    if isinstance(value, T.Var):
        meet = ontology.compatible(var.concept, value.concept)
        if meet is None:
            return None
        out = env.copy()
        out[var.name] = value if value.concept == meet else T.Var(value.name, meet)
        return out
    if var.concept != TOP:
        c = T.concept_of(value, ontology)
        if c != TOP and not ontology.is_subconcept(c, var.concept):
            return None
        if c == TOP and not isinstance(value, (T.Compound, T.ListTerm)) and not _opaque(value):
            # Untyped constant: allow (wildcard semantics).
            pass
    out = env.copy()
    out[var.name] = value
    return out


def _opaque(value) -> bool:
    """Formulas/action structures used as argument values unify structurally."""
    return not isinstance(value, (T.Atom, T.Num, T.Text, T.TimeTerm))


def unify(a, b, env: Subst | None = None, ontology: Ontology | None = None):
    """Most general unifier extending ``env``, or None.

    Probability fields are ignored; a ``None`` relativization on either
    side acts as a wildcard.
    """
    env = Subst() if env is None else env
    ontology = ontology if ontology is not None else _DEFAULT_ONT
    return _unify(a, b, env, ontology)


_DEFAULT_ONT = Ontology()


def _unify(a, b, env, ont):
    if isinstance(a, T.Var):
        a = env.walk(a)
    if isinstance(b, T.Var):
        b = env.walk(b)
    if isinstance(a, T.Var):
        return _bind(a, b, env, ont)
    if isinstance(b, T.Var):
        return _bind(b, a, env, ont)
    if type(a) is not type(b):
        return None
    if isinstance(a, T.Atom):
        return env if a.name == b.name else None
    if isinstance(a, T.Num):
        return env if a.value == b.value and (a.unit == b.unit or None in (a.unit, b.unit)) else None
    if isinstance(a, T.Text):
        return env if a.value == b.value else None
    if isinstance(a, T.TimeTerm):
        return env if (a.kind, a.token) == (b.kind, b.token) else None
    if isinstance(a, T.Compound):
        if a.functor != b.functor or len(a.args) != len(b.args):
            return None
        for (ra, va), (rb, vb) in zip(a.args, b.args):
            if ra != rb:
                return None
            env = _unify(va, vb, env, ont)
            if env is None:
                return None
        return env
    if isinstance(a, T.PrimAct):
        if a.name != b.name or len(a.args) != len(b.args):
            return None
        for (ra, va), (rb, vb) in zip(a.args, b.args):
            if ra != rb:
                return None
            env = _unify(va, vb, env, ont)
            if env is None:
                return None
        return env
    if isinstance(a, T.Pred):
        if a.name != b.name or len(a.args) != len(b.args):
            return None
        return _unify_seq(a.args, b.args, env, ont)
    if isinstance(a, (T.PGoal,)):
        env = _unify(a.agent, b.agent, env, ont)
        if env is None:
            return None
        env = _unify(a.body, b.body, env, ont)
        if env is None:
            return None
        if a.rel is None or b.rel is None:
            return env
        return _unify(a.rel, b.rel, env, ont)
    if isinstance(a, (T.Intend,)):
        env = _unify(a.agent, b.agent, env, ont)
        if env is None:
            return None
        env = _unify(a.occ, b.occ, env, ont)
        if env is None:
            return None
        if a.rel is None or b.rel is None:
            return env
        return _unify(a.rel, b.rel, env, ont)
    if isinstance(a, T.Bel):
        return _unify_seq((a.agent, a.body), (b.agent, b.body), env, ont)
    # Everything else: zip structural children.
    ka, kb = T.children(a), T.children(b)
    if len(ka) != len(kb):
        return None
    return _unify_seq(ka, kb, env, ont)


def _unify_seq(xs, ys, env, ont):
    for x, y in zip(xs, ys):
        env = _unify(x, y, env, ont)
        if env is None:
            return None
    return env

"""Logical-form trees: terms, formulas, and action expressions.

Everything here is an immutable dataclass, safe to share across threads
and usable as dict keys.  Structural operations (free variables,
substitution, renaming, negation normal form) live at the bottom of the
module and dispatch on node type.

Conventions:
  * variables are typed (``Var("C", "covid_vaccination_center")``);
  * compound terms and primitive actions carry role-labelled argument
    lists; predicates use positional arguments (role ``None``);
  * modal nodes (``Bel``, ``PGoal``, ``Intend``, ``KnowIf``, ``KnowRef``)
    carry an agent term and, where meaningful, a probability and a
    relativization formula.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Optional, Union

from .ontology import TOP, Ontology

ONE = Decimal(1)

# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str
    concept: str = TOP

    def __repr__(self):
        return f"{self.name}#{self.concept}" if self.concept != TOP else self.name


@dataclass(frozen=True)
class Atom:
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class Num:
    value: Fraction
    unit: Optional[str] = None

    def __repr__(self):
        v = str(self.value)
        return f"{v}#{self.unit}" if self.unit else v


@dataclass(frozen=True)
class Text:
    value: str


_WEEKDAYS = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]


@dataclass(frozen=True)
class TimeTerm:
    kind: str   # "clock" or "date"
    token: str  # canonical token, e.g. "9am", "monday"

    @property
    def sort_key(self):
        if self.kind == "clock":
            return (0, clock_minutes(self.token))
        return (1, _WEEKDAYS.index(self.token) if self.token in _WEEKDAYS else 99)

    def __repr__(self):
        return self.token


def clock_minutes(token: str) -> int:
    body, half = token[:-2], token[-2:]
    if ":" in body:
        h, m = body.split(":")
    else:
        h, m = body, "0"
    hours = int(h) % 12
    if half == "pm":
        hours += 12
    return hours * 60 + int(m)


@dataclass(frozen=True)
class Compound:
    functor: str
    args: tuple = ()  # tuple of (role | None, value)

    def positional(self):
        return tuple(v for _, v in self.args)

    def __repr__(self):
        inner = " ".join(
            f"({r} {v!r})" if r else repr(v) for r, v in self.args
        )
        return f"({self.functor} {inner})" if inner else f"({self.functor})"


@dataclass(frozen=True)
class ListTerm:
    items: tuple = ()


# ---------------------------------------------------------------------------
# Action expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrimAct:
    name: str
    args: tuple = ()  # role-labelled (role, value) pairs

    def arg(self, role):
        for r, v in self.args:
            if r == role:
                return v
        return None

    def with_arg(self, role, value):
        return PrimAct(
            self.name, tuple((r, value if r == role else v) for r, v in self.args)
        )


@dataclass(frozen=True)
class SeqAct:
    parts: tuple


@dataclass(frozen=True)
class ConditAct:
    cond: "Formula"
    body: "ActionExpr"


@dataclass(frozen=True)
class DisjAct:
    left: "ActionExpr"
    right: "ActionExpr"


ActionExpr = Union[PrimAct, SeqAct, ConditAct, DisjAct, Var]


@dataclass(frozen=True)
class ActionRef:
    """``(action <agent> <expr> <constraint>)`` — who is bringing an action about."""

    agent: "Term"
    expr: ActionExpr
    constraint: "Formula"


@dataclass(frozen=True)
class Occurrence:
    act: ActionRef
    location: "Term"
    time: "Term"


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Pred:
    name: str
    args: tuple = ()

    def __repr__(self):
        if not self.args:
            return f"({self.name})"
        return f"({self.name} {' '.join(map(repr, self.args))})"


TRUE = Pred("true")
FALSE = Pred("false")


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple


@dataclass(frozen=True)
class Or:
    parts: tuple


@dataclass(frozen=True)
class Exists:
    var: Var
    body: "Formula"


@dataclass(frozen=True)
class Equal:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Descr:
    """A description ``Var^Body`` — the such-that binder."""

    var: Var
    body: "Formula"


@dataclass(frozen=True)
class Bel:
    agent: "Term"
    body: "Formula"
    prob: Decimal = ONE


@dataclass(frozen=True)
class GoalF:
    agent: "Term"
    body: "Formula"


@dataclass(frozen=True)
class PGoal:
    agent: "Term"
    body: "Formula"
    rel: Optional["Formula"] = None
    prob: Decimal = ONE


@dataclass(frozen=True)
class Intend:
    agent: "Term"
    occ: Occurrence
    rel: Optional["Formula"] = None
    prob: Decimal = ONE


@dataclass(frozen=True)
class KnowIf:
    agent: "Term"
    body: "Formula"


@dataclass(frozen=True)
class KnowRef:
    agent: "Term"
    var: Var
    body: "Formula"


@dataclass(frozen=True)
class Eventually:
    body: "Formula"


@dataclass(frozen=True)
class Always:
    body: "Formula"


@dataclass(frozen=True)
class Before:
    first: "Formula"
    second: "Formula"


@dataclass(frozen=True)
class DoF:
    occ: Occurrence


@dataclass(frozen=True)
class DoneF:
    occ: Occurrence


@dataclass(frozen=True)
class DoingF:
    occ: Occurrence


@dataclass(frozen=True)
class Failed:
    act: ActionRef
    reason: "Term"


@dataclass(frozen=True)
class Impossible:
    act: ActionRef


@dataclass(frozen=True)
class Blocked:
    body: "Formula"


@dataclass(frozen=True)
class Default:
    body: "Formula"


Formula = Union[
    Pred, Not, And, Or, Exists, Equal, Bel, GoalF, PGoal, Intend, KnowIf, KnowRef,
    Eventually, Always, Before, DoF, DoneF, DoingF, Failed, Impossible, Blocked,
    Default, Var,
]
Term = Union[Var, Atom, Num, Text, TimeTerm, Compound, ListTerm, ActionRef, Descr, Formula]

MODAL_TYPES = (Bel, GoalF, PGoal, Intend, KnowIf, KnowRef)


def conj(parts) -> Formula:
    parts = [p for p in parts if p != TRUE]
    flat = []
    for p in parts:
        flat.extend(p.parts) if isinstance(p, And) else flat.append(p)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(parts) -> Formula:
    flat = []
    for p in parts:
        flat.extend(p.parts) if isinstance(p, Or) else flat.append(p)
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


# ---------------------------------------------------------------------------
# Generic traversal
# ---------------------------------------------------------------------------


def children(node):
    """Immediate sub-nodes of any tree node, binder-blind."""
    if isinstance(node, (Var, Atom, Num, Text, TimeTerm)):
        return ()
    if isinstance(node, Compound):
        return tuple(v for _, v in node.args)
    if isinstance(node, ListTerm):
        return node.items
    if isinstance(node, PrimAct):
        return tuple(v for _, v in node.args)
    if isinstance(node, SeqAct):
        return node.parts
    if isinstance(node, ConditAct):
        return (node.cond, node.body)
    if isinstance(node, DisjAct):
        return (node.left, node.right)
    if isinstance(node, ActionRef):
        return (node.agent, node.expr, node.constraint)
    if isinstance(node, Occurrence):
        return (node.act, node.location, node.time)
    if isinstance(node, Pred):
        return node.args
    if isinstance(node, Not):
        return (node.body,)
    if isinstance(node, (And, Or)):
        return node.parts
    if isinstance(node, Exists):
        return (node.var, node.body)
    if isinstance(node, Equal):
        return (node.left, node.right)
    if isinstance(node, Descr):
        return (node.var, node.body)
    if isinstance(node, Bel):
        return (node.agent, node.body)
    if isinstance(node, GoalF):
        return (node.agent, node.body)
    if isinstance(node, PGoal):
        return (node.agent, node.body) + ((node.rel,) if node.rel is not None else ())
    if isinstance(node, Intend):
        return (node.agent, node.occ) + ((node.rel,) if node.rel is not None else ())
    if isinstance(node, KnowIf):
        return (node.agent, node.body)
    if isinstance(node, KnowRef):
        return (node.agent, node.var, node.body)
    if isinstance(node, (Eventually, Always, Blocked, Default)):
        return (node.body,)
    if isinstance(node, Before):
        return (node.first, node.second)
    if isinstance(node, (DoF, DoneF, DoingF)):
        return (node.occ,)
    if isinstance(node, Failed):
        return (node.act, node.reason)
    if isinstance(node, Impossible):
        return (node.act,)
    raise TypeError(f"unknown node {node!r}")


def walk_nodes(node):
    yield node
    for c in children(node):
        yield from walk_nodes(c)


def binder_var(node):
    if isinstance(node, (Exists, Descr)):
        return node.var
    if isinstance(node, KnowRef):
        return node.var
    return None


def free_vars(node) -> set:
    """Variables not captured by an exists / such-that binder."""
    out = set()
    _free_vars(node, frozenset(), out)
    return out


def _free_vars(node, bound, out):
    if isinstance(node, Var):
        if node.name not in bound:
            out.add(node)
        return
    b = binder_var(node)
    if b is not None:
        inner = bound | {b.name}
        if isinstance(node, KnowRef):
            _free_vars(node.agent, bound, out)
            _free_vars(node.body, inner, out)
        else:
            _free_vars(node.body, inner, out)
        return
    for c in children(node):
        _free_vars(c, bound, out)


def map_node(node, fn):
    """Rebuild a node applying ``fn`` to every child (post-order helper)."""
    if isinstance(node, (Atom, Num, Text, TimeTerm)):
        return node
    if isinstance(node, Var):
        return node
    if isinstance(node, Compound):
        return Compound(node.functor, tuple((r, fn(v)) for r, v in node.args))
    if isinstance(node, ListTerm):
        return ListTerm(tuple(fn(v) for v in node.items))
    if isinstance(node, PrimAct):
        return PrimAct(node.name, tuple((r, fn(v)) for r, v in node.args))
    if isinstance(node, SeqAct):
        return SeqAct(tuple(fn(p) for p in node.parts))
    if isinstance(node, ConditAct):
        return ConditAct(fn(node.cond), fn(node.body))
    if isinstance(node, DisjAct):
        return DisjAct(fn(node.left), fn(node.right))
    if isinstance(node, ActionRef):
        return ActionRef(fn(node.agent), fn(node.expr), fn(node.constraint))
    if isinstance(node, Occurrence):
        return Occurrence(fn(node.act), fn(node.location), fn(node.time))
    if isinstance(node, Pred):
        return Pred(node.name, tuple(fn(a) for a in node.args))
    if isinstance(node, Not):
        return Not(fn(node.body))
    if isinstance(node, And):
        return And(tuple(fn(p) for p in node.parts))
    if isinstance(node, Or):
        return Or(tuple(fn(p) for p in node.parts))
    if isinstance(node, Exists):
        return Exists(fn(node.var), fn(node.body))
    if isinstance(node, Equal):
        return Equal(fn(node.left), fn(node.right))
    if isinstance(node, Descr):
        return Descr(fn(node.var), fn(node.body))
    if isinstance(node, Bel):
        return Bel(fn(node.agent), fn(node.body), node.prob)
    if isinstance(node, GoalF):
        return GoalF(fn(node.agent), fn(node.body))
    if isinstance(node, PGoal):
        return PGoal(fn(node.agent), fn(node.body),
                     fn(node.rel) if node.rel is not None else None, node.prob)
    if isinstance(node, Intend):
        return Intend(fn(node.agent), fn(node.occ),
                      fn(node.rel) if node.rel is not None else None, node.prob)
    if isinstance(node, KnowIf):
        return KnowIf(fn(node.agent), fn(node.body))
    if isinstance(node, KnowRef):
        return KnowRef(fn(node.agent), fn(node.var), fn(node.body))
    if isinstance(node, Eventually):
        return Eventually(fn(node.body))
    if isinstance(node, Always):
        return Always(fn(node.body))
    if isinstance(node, Before):
        return Before(fn(node.first), fn(node.second))
    if isinstance(node, DoF):
        return DoF(fn(node.occ))
    if isinstance(node, DoneF):
        return DoneF(fn(node.occ))
    if isinstance(node, DoingF):
        return DoingF(fn(node.occ))
    if isinstance(node, Failed):
        return Failed(fn(node.act), fn(node.reason))
    if isinstance(node, Impossible):
        return Impossible(fn(node.act))
    if isinstance(node, Blocked):
        return Blocked(fn(node.body))
    if isinstance(node, Default):
        return Default(fn(node.body))
    raise TypeError(f"unknown node {node!r}")


# ---------------------------------------------------------------------------
# Substitution application (capture avoiding)
# ---------------------------------------------------------------------------


def substitute(node, mapping: dict):
    """Replace free variables per ``mapping`` (name -> term).

    A binding never crosses a quantifier that rebinds the same name.
    """
    if not mapping:
        return node
    if isinstance(node, Var):
        seen = set()
        cur = node
        while isinstance(cur, Var) and cur.name in mapping and cur.name not in seen:
            seen.add(cur.name)
            cur = mapping[cur.name]
        return substitute(cur, {k: v for k, v in mapping.items() if k not in seen}) \
            if not isinstance(cur, Var) else cur
    b = binder_var(node)
    if b is not None and b.name in mapping:
        shielded = {k: v for k, v in mapping.items() if k != b.name}
        if isinstance(node, KnowRef):
            return KnowRef(substitute(node.agent, mapping), node.var,
                           substitute(node.body, shielded))
        if isinstance(node, Exists):
            return Exists(node.var, substitute(node.body, shielded))
        if isinstance(node, Descr):
            return Descr(node.var, substitute(node.body, shielded))
    return map_node(node, lambda c: substitute(c, mapping))


_fresh_counter = itertools.count(1)


def fresh_name(base: str) -> str:
    return f"{base.split('_')[0]}_{next(_fresh_counter)}"


def standardize_apart(node, renaming: dict | None = None):
    """Fresh variable names throughout; structure otherwise preserved.

    Returns (renamed node, {old name: new Var}).
    """
    renaming = {} if renaming is None else renaming

    def ren(n):
        if isinstance(n, Var):
            if n.name not in renaming:
                renaming[n.name] = Var(fresh_name(n.name), n.concept)
            return renaming[n.name]
        return map_node(n, ren)

    return ren(node), renaming


# ---------------------------------------------------------------------------
# Negation normal form (propositional layer; modal nodes pass through)
# ---------------------------------------------------------------------------


def negation_normal_form(f: Formula) -> Formula:
    if isinstance(f, Not):
        inner = f.body
        if isinstance(inner, Not):
            return negation_normal_form(inner.body)
        if isinstance(inner, And):
            return disj([negation_normal_form(Not(p)) for p in inner.parts])
        if isinstance(inner, Or):
            return conj([negation_normal_form(Not(p)) for p in inner.parts])
        if inner == TRUE:
            return FALSE
        if inner == FALSE:
            return TRUE
        return Not(negation_normal_form(inner)) if isinstance(inner, (And, Or)) else Not(inner)
    if isinstance(f, And):
        return conj([negation_normal_form(p) for p in f.parts])
    if isinstance(f, Or):
        return disj([negation_normal_form(p) for p in f.parts])
    if isinstance(f, Exists):
        return Exists(f.var, negation_normal_form(f.body))
    return f


# ---------------------------------------------------------------------------
# Rewrite-termination measure
# ---------------------------------------------------------------------------


def measure(f) -> tuple:
    """(modal depth, connective count, knowref count) over goal content.

    Relativization formulas are excluded: they echo the parent and would
    otherwise defeat the lexicographic decrease argument.
    """
    return (_modal_depth(f), _connectives(f), _knowrefs(f))


def _content_children(node):
    if isinstance(node, PGoal):
        return (node.body,)
    if isinstance(node, Intend):
        return (node.occ,)
    return children(node)


def _modal_depth(node) -> int:
    kids = _content_children(node)
    base = max((_modal_depth(c) for c in kids), default=0)
    return base + 1 if isinstance(node, MODAL_TYPES) else base


def _connectives(node) -> int:
    kids = _content_children(node)
    own = 1 if isinstance(node, (And, Or, Not)) else 0
    return own + sum(_connectives(c) for c in kids)


def _knowrefs(node) -> int:
    kids = _content_children(node)
    own = 1 if isinstance(node, KnowRef) else 0
    return own + sum(_knowrefs(c) for c in kids)


# ---------------------------------------------------------------------------
# Concept typing of terms
# ---------------------------------------------------------------------------


def concept_of(term, ontology: Ontology) -> str:
    if isinstance(term, Var):
        return term.concept
    if isinstance(term, Atom):
        return ontology.concept_of_atom(term.name)
    if isinstance(term, Num):
        return term.unit or "number"
    if isinstance(term, TimeTerm):
        return term.kind == "clock" and "time" or "date"
    if isinstance(term, Text):
        return "text"
    return TOP

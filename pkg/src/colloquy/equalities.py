"""Equivalence classes over variables and constants, guarded by modal scope.

The rule engine copies formulas when it derives new goal records, so the
"same" planning variable acquires a fresh name in every record.  This
store re-links those copies: merging two variables records that they
denote the same thing, and a class may absorb at most one constant,
which then becomes the representative every member resolves to.

Scope tags block equality reasoning from crossing modal operators: a
variable bound *inside* an agent's belief (its scope names that agent
chain) may only merge with elements carrying the identical chain.
Quantified-in variables carry the empty chain and mix freely with
constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import terms as T
from .syntax import print_term


@dataclass
class MergeResult:
    merged: bool
    reason: str = "ok"
    representative: object = None


def _is_constant(x) -> bool:
    return not isinstance(x, T.Var)


def _key(x) -> str:
    return x.name if isinstance(x, T.Var) else "c:" + print_term(x)


class EquivalenceStore:
    def __init__(self):
        self._parent: dict[str, str] = {}
        self._term: dict[str, object] = {}
        self._constant: dict[str, object] = {}  # root key -> constant term
        self._scope: dict[str, tuple] = {}
        self.events: list[tuple] = []
        self._on_constant = []  # callbacks fired when a class gains a constant

    def on_constant(self, fn):
        self._on_constant.append(fn)

    def register(self, var: T.Var, scope: tuple = ()):
        k = _key(var)
        if k not in self._parent:
            self._parent[k] = k
            self._term[k] = var
            self._scope[k] = tuple(scope)

    def known(self, x) -> bool:
        return _key(x) in self._parent

    def scope_of(self, x) -> tuple:
        k = self._find(_key(x)) if _key(x) in self._parent else None
        if k is None:
            return ()
        return self._scope.get(k, ())

    def _find(self, k: str) -> str:
        while self._parent[k] != k:
            self._parent[k] = self._parent[self._parent[k]]
            k = self._parent[k]
        return k

    def merge(self, a, b, scope: tuple = ()) -> MergeResult:
        """Join the classes of ``a`` and ``b``.

        Refused when it would join two distinct constants (inconsistency,
        logged) or cross incompatible modal scopes.
        """
        for x in (a, b):
            k = _key(x)
            if k not in self._parent:
                self._parent[k] = k
                self._term[k] = x
                self._scope[k] = tuple(scope)
                if _is_constant(x):
                    self._constant[k] = x
        ka, kb = self._find(_key(a)), self._find(_key(b))
        if ka == kb:
            return MergeResult(False, "noop", self.resolve(a))
        sa, sb = self._scope.get(ka, ()), self._scope.get(kb, ())
        if sa != sb:
            self.events.append(("refused-scope", print_term(a), print_term(b), sa, sb))
            return MergeResult(False, "scope")
        ca, cb = self._constant.get(ka), self._constant.get(kb)
        if ca is not None and cb is not None and ca != cb:
            self.events.append(("inconsistent", print_term(ca), print_term(cb)))
            return MergeResult(False, "inconsistent")
        # constant-bearing class becomes the root
        if cb is not None and ca is None:
            ka, kb = kb, ka
            ca, cb = cb, ca
        self._parent[kb] = ka
        if ca is not None:
            self._constant[ka] = ca
        self.events.append(("merge", print_term(a), print_term(b)))
        gained = ca is not None and cb is None and not _is_constant(b if ka == self._find(_key(a)) else a)
        if ca is not None:
            for fn in self._on_constant:
                fn(ca)
        return MergeResult(True, "ok", ca if ca is not None else self._term[ka])

    def resolve(self, x):
        """Representative for ``x``: its class constant when one exists."""
        k = _key(x)
        if k not in self._parent:
            return x
        root = self._find(k)
        return self._constant.get(root, x)

    def resolve_term(self, node):
        """Deep resolution: replace variable occurrences by their class
        constant.  Binder positions keep their variable even when the class
        has resolved; the body occurrences carry the value."""
        if isinstance(node, T.Var):
            r = self.resolve(node)
            return r if not isinstance(r, T.Var) else node
        if isinstance(node, T.KnowRef):
            return T.KnowRef(self.resolve_term(node.agent), node.var,
                             self.resolve_term(node.body))
        if isinstance(node, T.Exists):
            return T.Exists(node.var, self.resolve_term(node.body))
        if isinstance(node, T.Descr):
            return T.Descr(node.var, self.resolve_term(node.body))
        return T.map_node(node, self.resolve_term)

    def same_class(self, a, b) -> bool:
        ka, kb = _key(a), _key(b)
        if ka not in self._parent or kb not in self._parent:
            return ka == kb
        return self._find(ka) == self._find(kb)

    def class_members(self, x) -> list:
        k = _key(x)
        if k not in self._parent:
            return [x]
        root = self._find(k)
        return [self._term[m] for m in self._parent if self._find(m) == root]

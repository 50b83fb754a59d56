"""Canonical textual syntax for logical forms.

S-expression style; round-trips exactly.  Examples:

    (pgoal u1 (done (action u1 (go_to (agent u1) (destination X#place)) true) Loc Time) Q 0.9)
    (knowref sys (^ A#years (age_of u1 A#years)))
    (bel u1 (and (p a) (not (q b 45#years))))

Tokens starting with an upper-case letter or underscore are variables,
optionally typed with ``#concept``.  Numbers may carry a ``#unit``.
Clock tokens (``9am``, ``10:30pm``) and weekday names parse as time terms.
Action primitives take role-labelled pairs ``(role value)``; predicates
take positional arguments.
"""

from __future__ import annotations

import re
from decimal import Decimal
from fractions import Fraction

from . import terms as T

_TOKEN = re.compile(r"""\s*(?:(;[^\n]*)|(\()|(\))|("(?:[^"\\]|\\.)*")|([^\s()";]+))""")
_CLOCK = re.compile(r"^\d{1,2}(:\d{2})?(am|pm)$")
_NUMBER = re.compile(r"^-?\d+(\.\d+)?(/\d+)?$")
_WEEKDAYS = set(T._WEEKDAYS)

FORMULA_HEADS = {
    "and", "or", "not", "exists", "equal", "bel", "goal", "pgoal", "intend",
    "knowif", "knowref", "eventually", "always", "before", "do", "done",
    "doing", "failed", "impossible", "blocked", "default",
}


class ParseError(ValueError):
    def __init__(self, message, line=None, col=None):
        self.line, self.col = line, col
        where = f" at line {line}, column {col}" if line is not None else ""
        super().__init__(f"{message}{where}")


def _line_col(text: str, index: int):
    line = text.count("\n", 0, index) + 1
    start = text.rfind("\n", 0, index) + 1
    return line, index - start + 1


def tokenize(text: str):
    out = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch == ";":
            nl = text.find("\n", pos)
            pos = len(text) if nl < 0 else nl + 1
            continue
        m = _TOKEN.match(text, pos)
        if not m:
            line, col = _line_col(text, pos)
            raise ParseError(f"unexpected character {ch!r}", line, col)
        tok = m.group(2) or m.group(3) or m.group(4) or m.group(5)
        start = m.end() - len(tok)
        line, col = _line_col(text, start)
        out.append((tok, line, col))
        pos = m.end()
    return out


def read_all(text: str):
    """Parse every top-level s-expression in ``text`` into nested lists."""
    toks = tokenize(text)
    items = []
    i = 0
    while i < len(toks):
        node, i = _read(toks, i)
        items.append(node)
    return items


def _read(toks, i):
    if i >= len(toks):
        raise ParseError("unexpected end of input")
    tok, line, col = toks[i]
    if tok == "(":
        out = []
        i += 1
        while True:
            if i >= len(toks):
                raise ParseError("missing )", line, col)
            if toks[i][0] == ")":
                return SExpr(out, line, col), i + 1
            node, i = _read(toks, i)
            out.append(node)
    if tok == ")":
        raise ParseError("unexpected )", line, col)
    return SToken(tok, line, col), i + 1


class SExpr(list):
    def __init__(self, items, line=None, col=None):
        super().__init__(items)
        self.line, self.col = line, col


class SToken(str):
    def __new__(cls, value, line=None, col=None):
        s = super().__new__(cls, value)
        s.line, s.col = line, col
        return s


# ---------------------------------------------------------------------------
# sexpr -> tree
# ---------------------------------------------------------------------------


def _is_var_token(tok: str) -> bool:
    head = tok.split("#")[0]
    return bool(head) and (head[0].isupper() or head[0] == "_")


def parse_term(node):
    if isinstance(node, SExpr):
        if node and node[0] == "^":
            return parse_descr(node)
        if node and node[0] == "action":
            return parse_action_ref(node)
        if node and node[0] == "list":
            return T.ListTerm(tuple(parse_term(x) for x in node[1:]))
        if node and isinstance(node[0], str) and node[0] in FORMULA_HEADS:
            return parse_formula(node)
        # compound term, positional args; nested (role value)? Terms are positional.
        head = node[0]
        return T.Compound(str(head), tuple((None, parse_term(a)) for a in node[1:]))
    tok = str(node)
    if tok.startswith('"') and tok.endswith('"'):
        return T.Text(tok[1:-1].replace('\\"', '"'))
    base, _, concept = tok.partition("#")
    if _NUMBER.match(base):
        if "/" in base:
            num, den = base.split("/")
            frac = Fraction(int(num), int(den))
        else:
            frac = Fraction(base)
        return T.Num(frac, concept or None)
    if _CLOCK.match(base):
        return T.TimeTerm("clock", base)
    if base in _WEEKDAYS:
        return T.TimeTerm("date", base)
    if _is_var_token(tok):
        return T.Var(base, concept or T.TOP)
    if concept:
        # typed constant: keep the atom; typing comes from the ontology
        return T.Atom(base)
    return T.Atom(base)


def parse_descr(node) -> T.Descr:
    if len(node) != 3:
        raise ParseError("(^ Var Body) takes two arguments", node.line, node.col)
    var = parse_term(node[1])
    if not isinstance(var, T.Var):
        raise ParseError("binder must be a variable", node.line, node.col)
    return T.Descr(var, parse_formula(node[2]))


def parse_action_expr(node):
    if isinstance(node, SToken):
        t = parse_term(node)
        if isinstance(t, (T.Var, T.Atom)):
            return t if isinstance(t, T.Var) else T.PrimAct(t.name)
        raise ParseError("bad action expression", node.line, node.col)
    head = str(node[0])
    if head == "seq":
        return T.SeqAct(tuple(parse_action_expr(x) for x in node[1:]))
    if head == "condit":
        return T.ConditAct(parse_formula(node[1]), parse_action_expr(node[2]))
    if head == "disj":
        return T.DisjAct(parse_action_expr(node[1]), parse_action_expr(node[2]))
    # primitive with (role value) pairs
    args = []
    for a in node[1:]:
        if not isinstance(a, SExpr) or len(a) != 2 or not isinstance(a[0], SToken):
            raise ParseError(f"action argument must be (role value) in {head}",
                             getattr(a, "line", node.line), getattr(a, "col", node.col))
        args.append((str(a[0]), parse_term(a[1])))
    return T.PrimAct(head, tuple(args))


def parse_action_ref(node) -> T.ActionRef:
    if len(node) != 4:
        raise ParseError("(action agent expr constraint)", node.line, node.col)
    return T.ActionRef(parse_term(node[1]), parse_action_expr(node[2]), parse_formula(node[3]))


def parse_occurrence(nodes, line=None, col=None) -> T.Occurrence:
    if len(nodes) != 3:
        raise ParseError("occurrence takes (action ...) loc time", line, col)
    act = parse_action_ref(nodes[0]) if isinstance(nodes[0], SExpr) else None
    if act is None:
        raise ParseError("occurrence must start with (action ...)", line, col)
    return T.Occurrence(act, parse_term(nodes[1]), parse_term(nodes[2]))


def _prob(tokens, default=T.ONE):
    if tokens:
        return Decimal(str(tokens[0]))
    return default


def parse_formula(node):
    if isinstance(node, SToken):
        t = parse_term(node)
        if isinstance(t, T.Var):
            return t
        if isinstance(t, T.Atom):
            if t.name == "true":
                return T.TRUE
            if t.name == "false":
                return T.FALSE
            return T.Pred(t.name)
        raise ParseError(f"{node} is not a formula", node.line, node.col)
    if not node:
        raise ParseError("empty formula", node.line, node.col)
    head = str(node[0])
    rest = node[1:]
    if head == "and":
        return T.conj([parse_formula(x) for x in rest])
    if head == "or":
        return T.disj([parse_formula(x) for x in rest])
    if head == "not":
        return T.Not(parse_formula(rest[0]))
    if head == "exists":
        var = parse_term(rest[0])
        return T.Exists(var, parse_formula(rest[1]))
    if head == "equal":
        return T.Equal(parse_term(rest[0]), parse_term(rest[1]))
    if head == "bel":
        prob = _prob(rest[2:])
        return T.Bel(parse_term(rest[0]), parse_formula(rest[1]), prob)
    if head == "goal":
        return T.GoalF(parse_term(rest[0]), parse_formula(rest[1]))
    if head == "pgoal":
        rel = parse_formula(rest[2]) if len(rest) > 2 else None
        return T.PGoal(parse_term(rest[0]), parse_formula(rest[1]), rel, _prob(rest[3:]))
    if head == "intend":
        occ = parse_occurrence(rest[1], node.line, node.col)
        rel = parse_formula(rest[2]) if len(rest) > 2 else None
        return T.Intend(parse_term(rest[0]), occ, rel, _prob(rest[3:]))
    if head == "knowif":
        return T.KnowIf(parse_term(rest[0]), parse_formula(rest[1]))
    if head == "knowref":
        d = parse_descr(rest[1])
        return T.KnowRef(parse_term(rest[0]), d.var, d.body)
    if head == "eventually":
        return T.Eventually(parse_formula(rest[0]))
    if head == "always":
        return T.Always(parse_formula(rest[0]))
    if head == "before":
        return T.Before(parse_formula(rest[0]), parse_formula(rest[1]))
    if head in ("do", "done", "doing"):
        occ = parse_occurrence(rest, node.line, node.col)
        return {"do": T.DoF, "done": T.DoneF, "doing": T.DoingF}[head](occ)
    if head == "failed":
        return T.Failed(parse_action_ref(rest[0]), parse_term(rest[1]))
    if head == "impossible":
        return T.Impossible(parse_action_ref(rest[0]))
    if head == "blocked":
        return T.Blocked(parse_formula(rest[0]))
    if head == "default":
        return T.Default(parse_formula(rest[0]))
    if head == "^":
        return parse_descr(node)
    # plain predicate, positional args
    return T.Pred(head, tuple(parse_term(a) for a in rest))


def parse(text: str):
    items = read_all(text)
    if len(items) != 1:
        raise ParseError(f"expected one form, got {len(items)}")
    return parse_formula(items[0])


# ---------------------------------------------------------------------------
# tree -> text
# ---------------------------------------------------------------------------


def print_term(t) -> str:
    if isinstance(t, T.Var):
        return f"{t.name}#{t.concept}" if t.concept != T.TOP else t.name
    if isinstance(t, T.Atom):
        return t.name
    if isinstance(t, T.Num):
        v = str(t.value)
        return f"{v}#{t.unit}" if t.unit else v
    if isinstance(t, T.Text):
        return '"' + t.value.replace('"', '\\"') + '"'
    if isinstance(t, T.TimeTerm):
        return t.token
    if isinstance(t, T.Compound):
        if not t.args:
            return f"({t.functor})"
        return f"({t.functor} {' '.join(print_term(v) for _, v in t.args)})"
    if isinstance(t, T.ListTerm):
        return f"(list {' '.join(print_term(v) for v in t.items)})".replace(" )", ")")
    if isinstance(t, T.Descr):
        return f"(^ {print_term(t.var)} {print_formula(t.body)})"
    if isinstance(t, T.ActionRef):
        return print_action_ref(t)
    return print_formula(t)


def print_action_expr(a) -> str:
    if isinstance(a, T.Var):
        return print_term(a)
    if isinstance(a, T.PrimAct):
        if not a.args:
            return f"({a.name})"
        inner = " ".join(f"({r} {print_term(v)})" for r, v in a.args)
        return f"({a.name} {inner})"
    if isinstance(a, T.SeqAct):
        return f"(seq {' '.join(print_action_expr(p) for p in a.parts)})"
    if isinstance(a, T.ConditAct):
        return f"(condit {print_formula(a.cond)} {print_action_expr(a.body)})"
    if isinstance(a, T.DisjAct):
        return f"(disj {print_action_expr(a.left)} {print_action_expr(a.right)})"
    raise TypeError(f"not an action expression: {a!r}")


def print_action_ref(ar: T.ActionRef) -> str:
    return f"(action {print_term(ar.agent)} {print_action_expr(ar.expr)} {print_formula(ar.constraint)})"


def _occ(o: T.Occurrence) -> str:
    return f"{print_action_ref(o.act)} {print_term(o.location)} {print_term(o.time)}"


def print_formula(f) -> str:
    if isinstance(f, T.Var):
        return print_term(f)
    if isinstance(f, T.Compound):
        return print_term(f)  # predicate written in term position
    if isinstance(f, T.Pred):
        if f.name in ("true", "false") and not f.args:
            return f.name
        if not f.args:
            return f"({f.name})"
        return f"({f.name} {' '.join(print_term(a) for a in f.args)})"
    if isinstance(f, T.Not):
        return f"(not {print_formula(f.body)})"
    if isinstance(f, T.And):
        return f"(and {' '.join(print_formula(p) for p in f.parts)})"
    if isinstance(f, T.Or):
        return f"(or {' '.join(print_formula(p) for p in f.parts)})"
    if isinstance(f, T.Exists):
        return f"(exists {print_term(f.var)} {print_formula(f.body)})"
    if isinstance(f, T.Equal):
        return f"(equal {print_term(f.left)} {print_term(f.right)})"
    if isinstance(f, T.Bel):
        p = f" {f.prob}" if f.prob != T.ONE else ""
        return f"(bel {print_term(f.agent)} {print_formula(f.body)}{p})"
    if isinstance(f, T.GoalF):
        return f"(goal {print_term(f.agent)} {print_formula(f.body)})"
    if isinstance(f, T.PGoal):
        rel = f" {print_formula(f.rel)}" if f.rel is not None else ""
        p = f" {f.prob}" if f.prob != T.ONE else ""
        if p and not rel:
            rel = " true"
        return f"(pgoal {print_term(f.agent)} {print_formula(f.body)}{rel}{p})"
    if isinstance(f, T.Intend):
        rel = f" {print_formula(f.rel)}" if f.rel is not None else ""
        p = f" {f.prob}" if f.prob != T.ONE else ""
        if p and not rel:
            rel = " true"
        return f"(intend {print_term(f.agent)} ({_occ(f.occ)}){rel}{p})"
    if isinstance(f, T.KnowIf):
        return f"(knowif {print_term(f.agent)} {print_formula(f.body)})"
    if isinstance(f, T.KnowRef):
        return f"(knowref {print_term(f.agent)} (^ {print_term(f.var)} {print_formula(f.body)}))"
    if isinstance(f, T.Eventually):
        return f"(eventually {print_formula(f.body)})"
    if isinstance(f, T.Always):
        return f"(always {print_formula(f.body)})"
    if isinstance(f, T.Before):
        return f"(before {print_formula(f.first)} {print_formula(f.second)})"
    if isinstance(f, T.DoF):
        return f"(do {_occ(f.occ)})"
    if isinstance(f, T.DoneF):
        return f"(done {_occ(f.occ)})"
    if isinstance(f, T.DoingF):
        return f"(doing {_occ(f.occ)})"
    if isinstance(f, T.Failed):
        return f"(failed {print_action_ref(f.act)} {print_term(f.reason)})"
    if isinstance(f, T.Impossible):
        return f"(impossible {print_action_ref(f.act)})"
    if isinstance(f, T.Blocked):
        return f"(blocked {print_formula(f.body)})"
    if isinstance(f, T.Default):
        return f"(default {print_formula(f.body)})"
    raise TypeError(f"cannot print {f!r}")


def canonical(f) -> str:
    return print_formula(f)


def canonical_renamed(f) -> str:
    """Canonical text with variables renamed in first-occurrence order.

    Used for golden-transcript diffs and record deduplication, where two
    formulas differing only in generated variable names, probability, or
    relativization annotations must compare equal.
    """
    mapping = {}

    def ren(n):
        if isinstance(n, T.Var):
            if n.name not in mapping:
                mapping[n.name] = T.Var(f"_V{len(mapping) + 1}", n.concept)
            return mapping[n.name]
        if isinstance(n, T.Bel):
            return T.Bel(ren(n.agent), ren(n.body))
        if isinstance(n, T.PGoal):
            return T.PGoal(ren(n.agent), ren(n.body))
        if isinstance(n, T.Intend):
            return T.Intend(ren(n.agent), ren(n.occ))
        return T.map_node(n, ren)

    return print_formula(ren(f))

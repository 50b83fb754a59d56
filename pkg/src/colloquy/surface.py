"""Canonical utterance grammar: deterministic text <-> logical form.

Patterns live in the domain file as ``(utterance "text with {Slot#type}"
LF)`` entries and drive both directions: parsing user text into surface
acts or bare payloads, and rendering system acts into their fixed clunky
wording.  Matching is first-pattern-wins in file order, which makes the
grammar deterministic by construction.

Slots convert between tokens and terms by the slot variable's concept:
numbers with units, clock times ("9 am"), weekday names, declared
ontology instances (multi-word atoms join with underscores), and
then-separated lists for route-like slots.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from . import terms as T
from .ontology import TOP, Ontology
from .speech import (
    ActLF, ConstraintLF, DontKnowLF, OverAnswerLF, PolarLF, SpeechActInstance,
    ValueLF, WhyLF,
)
from .syntax import ParseError, parse_action_expr, parse_descr, parse_formula
from .unify import unify

_SLOT = re.compile(r"\{([A-Za-z_][A-Za-z_0-9]*)(?:#([a-z_0-9]+))?\}")
_PUNCT = re.compile(r"[.,!?']")
_CLOCK_PAIR = re.compile(r"^\d{1,2}(:\d{2})?$")


@dataclass
class Slot:
    name: str
    concept: str


@dataclass
class UtterancePattern:
    text: str
    tokens: list          # str literals and Slot objects
    kind: str             # act type, "exec", "value", "polar+", "polar-", "why", "dontknow", "over-answer"
    lf: object            # parsed sexpr payload (varies by kind)


def normalize_text(text: str) -> list:
    return _PUNCT.sub("", text.strip().lower()).split()


def compile_pattern(text: str, lf_sexpr) -> UtterancePattern:
    tokens = []
    for raw in text.strip().split():
        m = _SLOT.fullmatch(raw)
        if m:
            tokens.append(Slot(m.group(1), m.group(2) or TOP))
        else:
            tokens.append(_PUNCT.sub("", raw.lower()))
    head = str(lf_sexpr[0])
    if head == "value":
        kind = "value"
        payload = str(lf_sexpr[1]).split("#")[0]
    elif head == "polar":
        kind, payload = ("polar+" if str(lf_sexpr[1]) == "true" else "polar-"), None
    elif head == "why":
        kind, payload = "why", None
    elif head == "dontknow":
        kind, payload = "dontknow", None
    elif head == "over-answer":
        kind = "over-answer"
        payload = (str(lf_sexpr[1]).split("#")[0], parse_descr(lf_sexpr[2]))
    elif head == "over-answer-constraint":
        kind = "over-answer-constraint"
        payload = parse_descr(lf_sexpr[1])
    elif head == "exec":
        kind = "exec"
        payload = _parse_act_content(head, lf_sexpr)
    else:
        kind = head
        payload = _parse_act_content(head, lf_sexpr)
    return UtterancePattern(text, tokens, kind, payload)


def _parse_act_content(act_type, sexpr):
    """(acttype S L content) -> (speaker var, listener var, content tree)."""
    if len(sexpr) != 4:
        raise ParseError(f"utterance act takes speaker listener content: {act_type}",
                         getattr(sexpr, "line", None), getattr(sexpr, "col", None))
    speaker = T.Var(str(sexpr[1]))
    listener = T.Var(str(sexpr[2]))
    body = sexpr[3]
    if act_type in ("whq", "informref", "assertref", "verifyref"):
        content = parse_descr(body)
    elif act_type in ("request", "exec"):
        content = parse_action_expr(body)
    else:
        content = parse_formula(body)
    return (speaker, listener, content)


# ---------------------------------------------------------------------------
# token <-> term conversion
# ---------------------------------------------------------------------------


def _consume_slot(tokens, i, slot: Slot, ontology: Ontology):
    """Try to read a value for ``slot`` at tokens[i]; yields (term, next_i)."""
    concept = slot.concept
    if i >= len(tokens):
        return
    tok = tokens[i]
    if concept == "route" or concept == "steps":
        # greedy: the rest of the utterance as a then-separated list
        rest = tokens[i:]
        items, cur = [], []
        for t in rest:
            if t == "then":
                if cur:
                    items.append(T.Atom("_".join(cur)))
                    cur = []
            else:
                cur.append(t)
        if cur:
            items.append(T.Atom("_".join(cur)))
        yield T.ListTerm(tuple(items)), len(tokens)
        return
    if concept in ("time",) or ontology.is_subconcept(concept, "time"):
        if re.fullmatch(r"\d{1,2}(:\d{2})?(am|pm)", tok):
            yield T.TimeTerm("clock", tok), i + 1
            return
        if _CLOCK_PAIR.fullmatch(tok) and i + 1 < len(tokens) and tokens[i + 1] in ("am", "pm"):
            yield T.TimeTerm("clock", tok + tokens[i + 1]), i + 2
            return
        return
    if concept in ("date",) or ontology.is_subconcept(concept, "date"):
        if tok in T._WEEKDAYS:
            yield T.TimeTerm("date", tok), i + 1
        return
    if re.fullmatch(r"-?\d+(\.\d+)?", tok):
        unit = None if concept in (TOP, "number") else concept
        if concept == TOP or ontology.is_subconcept(concept, "number") or concept == "number":
            yield T.Num(Fraction(tok), unit), i + 1
            return
    # declared instance: longest underscore-joined n-gram of the concept
    for n in range(min(4, len(tokens) - i), 0, -1):
        name = "_".join(tokens[i:i + n])
        c = ontology.concept_of_atom(name)
        if c != TOP and (concept == TOP or ontology.is_subconcept(c, concept)):
            yield T.Atom(name), i + n
            return
    if concept == TOP and tok.isalpha():
        yield T.Atom(tok), i + 1


def render_slot_value(value) -> str | None:
    if isinstance(value, T.Atom):
        return value.name.replace("_", " ")
    if isinstance(value, T.Num):
        return str(value.value)
    if isinstance(value, T.TimeTerm):
        if value.kind == "clock":
            m = re.fullmatch(r"(\d{1,2}(?::\d{2})?)(am|pm)", value.token)
            return f"{m.group(1)} {m.group(2)}" if m else value.token
        return value.token
    if isinstance(value, T.ListTerm):
        parts = [render_slot_value(v) for v in value.items]
        if any(p is None for p in parts):
            return None
        return " then ".join(parts)
    return None


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _match_tokens(pattern: UtterancePattern, tokens, ontology) -> dict | None:
    def rec(pi, ti, binds):
        if pi == len(pattern.tokens):
            return binds if ti == len(tokens) else None
        item = pattern.tokens[pi]
        if isinstance(item, Slot):
            for value, nxt in _consume_slot(tokens, ti, item, ontology):
                out = rec(pi + 1, nxt, {**binds, item.name: value})
                if out is not None:
                    return out
            return None
        if ti < len(tokens) and tokens[ti] == item:
            return rec(pi + 1, ti + 1, binds)
        return None

    return rec(0, 0, {})


def parse_canonical(text, patterns, ontology, speaker, listener):
    """Text -> surface act or bare payload; raises ParseError with a hint."""
    tokens = normalize_text(text)
    if not tokens:
        raise ParseError("empty utterance")
    best, best_score = None, -1
    for pattern in patterns:
        binds = _match_tokens(pattern, tokens, ontology)
        if binds is None:
            score = _prefix_score(pattern, tokens)
            if score > best_score:
                best, best_score = pattern, score
            continue
        return _build_lf(pattern, binds, speaker, listener)
    hint = f'; closest pattern: "{best.text}"' if best is not None else ""
    raise ParseError(f"no grammar pattern matches {text!r}{hint}")


def _prefix_score(pattern, tokens) -> int:
    score = 0
    for a, b in zip(pattern.tokens, tokens):
        if isinstance(a, Slot) or a == b:
            score += 1
        else:
            break
    return score


def _build_lf(pattern: UtterancePattern, binds, speaker, listener):
    if pattern.kind == "value":
        return ValueLF(binds[pattern.lf])
    if pattern.kind == "polar+":
        return PolarLF(True)
    if pattern.kind == "polar-":
        return PolarLF(False)
    if pattern.kind == "why":
        return WhyLF()
    if pattern.kind == "dontknow":
        return DontKnowLF()
    if pattern.kind == "over-answer":
        var_name, descr = pattern.lf
        body = T.substitute(descr.body, dict(binds))
        return OverAnswerLF(binds[var_name], T.Descr(descr.var, body))
    if pattern.kind == "over-answer-constraint":
        descr = pattern.lf
        body = T.substitute(descr.body, dict(binds))
        return ConstraintLF(T.Descr(descr.var, body))
    sv, lv, content = pattern.lf
    mapping = {sv.name: speaker, lv.name: listener, **binds}
    content = T.substitute(content, mapping)
    if pattern.kind == "exec":
        return ActLF(content)
    act = SpeechActInstance(pattern.kind, speaker, listener, content)
    return ActLF(act.to_prim())


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------


def generate_canonical(act: SpeechActInstance, patterns, ontology, resolver=None) -> str:
    """Deterministic clunky wording for an act: first matching pattern."""
    resolver = resolver or (lambda x: x)
    content = resolver(act.content if not isinstance(act.content, T.Descr)
                       else T.Descr(act.content.var, act.content.body))
    for pattern in patterns:
        if pattern.kind != act.act_type:
            continue
        rendered = _render_with(pattern, act, content, ontology, resolver)
        if rendered is not None:
            return rendered
    return _generic_render(act, content)


def generate_exec(instance: T.PrimAct, patterns, ontology, resolver, speaker, listener) -> str:
    for pattern in patterns:
        if pattern.kind != "exec":
            continue
        sv, lv, prim = pattern.lf
        fresh, ren = T.standardize_apart(prim)
        env = unify(fresh, resolver(instance), ontology=ontology)
        if env is None:
            continue
        mapping = {}
        for old, newv in ren.items():
            val = env.deep(newv)
            mapping[old] = resolver(val)
        mapping[sv.name] = speaker
        mapping[lv.name] = listener
        text = _fill(pattern, mapping)
        if text is not None:
            return text
    from .syntax import print_action_expr
    return print_action_expr(resolver(instance))


def _render_with(pattern, act, content, ontology, resolver):
    sv, lv, pat_content = pattern.lf
    fresh, ren = T.standardize_apart(pat_content)
    env = unify(fresh, content, ontology=ontology)
    if env is None:
        return None
    mapping = {}
    for old, newv in ren.items():
        val = env.deep(newv)
        mapping[old] = resolver(val)
    mapping[sv.name] = act.speaker
    mapping[lv.name] = act.listener
    return _fill(pattern, mapping)


def _fill(pattern, mapping) -> str | None:
    out = []
    for item in pattern.tokens:
        if isinstance(item, Slot):
            val = mapping.get(item.name)
            if val is None or isinstance(val, T.Var):
                return None
            rendered = render_slot_value(val)
            if rendered is None:
                return None
            out.append(rendered)
        else:
            out.append(item)
    return " ".join(out)


def _generic_render(act, content) -> str:
    from .syntax import print_formula, print_term
    try:
        body = print_term(content) if isinstance(content, T.Descr) else print_formula(content)
    except TypeError:
        body = "nil"
    return f"{act.act_type}: {body}"

"""Domain pack loading: actions, facts, rules, defaults, scripted agents,
and the canonical utterance grammar, all from one text file.

The file is a sequence of s-expression directives; parse errors carry
line and column.  A loaded pack is immutable and shared by every session
built from it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import terms as T
from .actions import ActionDescription, ActionRegistry
from .kb import KnowledgeBase
from .ontology import Ontology, base_ontology
from .speech import SpeechActInstance, register_speech_acts
from .surface import compile_pattern, generate_canonical, generate_exec, parse_canonical
from .syntax import (
    ParseError, SExpr, parse_action_expr, parse_formula, parse_term, read_all,
)
from .unify import unify

DEFAULT_PACK = Path(__file__).parent / "domains" / "vaccination.lisp"


@dataclass
class ScriptedAgent:
    """A stand-in interlocutor that answers from a private fact table."""
    name: str
    facts: list

    def respond(self, act: SpeechActInstance, sess):
        me = T.Atom(self.name)
        asker = act.speaker
        if act.act_type == "ynq":
            content = sess.kb.resolve(act.content)
            for fact in self.facts:
                if unify(content, fact, ontology=sess.kb.ontology) is not None:
                    return SpeechActInstance("inform", me, asker, content)
                if isinstance(fact, T.Not) and \
                        unify(content, fact.body, ontology=sess.kb.ontology) is not None:
                    return SpeechActInstance("inform", me, asker, T.Not(content))
            return SpeechActInstance("inform", me, asker,
                                     T.Not(T.KnowIf(me, content)))
        if act.act_type == "whq":
            d = act.content
            for fact in self.facts:
                env = unify(d.body, fact, ontology=sess.kb.ontology)
                if env is not None:
                    return SpeechActInstance(
                        "informref", me, asker,
                        T.Descr(d.var, env.deep(d.body)))
            return SpeechActInstance("inform", me, asker,
                                     T.Not(T.KnowRef(me, d.var, d.body)))
        return None


@dataclass
class DomainPack:
    name: str
    system: str
    user: str
    ontology: Ontology
    registry: ActionRegistry
    facts: list
    rules: list                      # (head, body, attributed-agent-or-None)
    defaults: list
    normal_activities: list          # (place concept, action template, prior)
    state_pairs: list                # (negative pattern, positive pattern)
    scripted: dict
    patterns: list
    trusted: set
    closed_world: set
    backends: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def build_kb(self) -> KnowledgeBase:
        kb = KnowledgeBase(self.ontology, system=self.system)
        kb.trusted = set(self.trusted)
        kb.closed_world = set(self.closed_world)
        for head, body, agent in self.rules:
            kb.add_rule(head, body, agent)
        for f in self.facts:
            kb.assert_formula(f, rule="domain", parents=(), standardize=False)
        for d in self.defaults:
            kb.assert_formula(T.Default(d), rule="domain", parents=())
        return kb

    def render(self, sess, act: SpeechActInstance) -> str:
        return generate_canonical(act, self.patterns, self.ontology,
                                  resolver=sess.kb.resolve)

    def render_exec(self, sess, instance) -> str:
        return generate_exec(instance, self.patterns, self.ontology,
                             sess.kb.resolve, sess.system, sess.user)

    def parse(self, text: str, speaker, listener):
        return parse_canonical(text, self.patterns, self.ontology, speaker, listener)


class DomainError(ValueError):
    pass


def load_pack(path: str | Path | None = None) -> DomainPack:
    path = Path(path) if path is not None else DEFAULT_PACK
    text = path.read_text()
    return load_pack_text(text, name=path.stem)


def load_pack_text(text: str, name: str = "pack") -> DomainPack:
    ontology = base_ontology()
    registry = ActionRegistry(ontology)
    register_speech_acts(registry)
    pack = DomainPack(
        name=name, system="sys", user="u1", ontology=ontology, registry=registry,
        facts=[], rules=[], defaults=[], normal_activities=[], state_pairs=[],
        scripted={}, patterns=[], trusted=set(), closed_world=set(),
    )
    deferred_actions = []
    for form in read_all(text):
        if not isinstance(form, SExpr) or not form:
            raise ParseError("top-level directives must be lists",
                             getattr(form, "line", None), getattr(form, "col", None))
        head = str(form[0])
        try:
            if head == "agents":
                for pair in form[1:]:
                    role, aname = str(pair[0]), str(pair[1])
                    if role == "system":
                        pack.system = aname
                    elif role == "user":
                        pack.user = aname
                    ontology.add_instance(aname, "person" if role == "user" else "agent")
            elif head == "concept":
                parent = str(form[2]) if len(form) > 2 else "top"
                ontology.add_concept(str(form[1]), parent)
            elif head == "instance":
                ontology.add_instance(str(form[1]), str(form[2]))
            elif head == "trusted":
                pack.trusted.add(str(form[1]))
            elif head == "closed_world":
                pack.closed_world.update(str(x) for x in form[1:])
            elif head == "action":
                deferred_actions.append(form)
            elif head == "fact":
                pack.facts.append(parse_formula(form[1]))
            elif head in ("rule", "attributed-rule"):
                agent = str(form[1]) if head == "attributed-rule" else None
                rest = form[2:] if head == "attributed-rule" else form[1:]
                items = list(rest)
                if ":-" not in [str(x) for x in items]:
                    raise ParseError("rule needs :- separator", form.line, form.col)
                sep = [str(x) for x in items].index(":-")
                rule_head = parse_formula(items[0])
                if sep != 1:
                    raise ParseError("rule head must be a single formula",
                                     form.line, form.col)
                body = [parse_formula(x) for x in items[2:]]
                pack.rules.append((rule_head, body, agent))
            elif head == "default":
                pack.defaults.append(parse_formula(form[1]))
            elif head == "normal_activity":
                concept = str(form[1])
                template = parse_action_expr(form[2])
                prior = float(str(form[3])) if len(form) > 3 else 1.0
                pack.normal_activities.append((concept, template, prior))
            elif head == "state-pair":
                pack.state_pairs.append((parse_formula(form[1]), parse_formula(form[2])))
            elif head == "scripted-agent":
                aname = str(form[1])
                facts = [parse_formula(f[1]) for f in form[2:] if str(f[0]) == "fact"]
                pack.scripted[aname] = ScriptedAgent(aname, facts)
                ontology.add_instance(aname, ontology.concept_of_atom(aname))
            elif head == "utterance":
                raw = str(form[1])
                if not (raw.startswith('"') and raw.endswith('"')):
                    raise ParseError("utterance text must be quoted", form.line, form.col)
                pack.patterns.append(compile_pattern(raw[1:-1], form[2]))
            else:
                raise ParseError(f"unknown directive {head}", form.line, form.col)
        except ParseError:
            raise
        except Exception as e:
            raise ParseError(f"bad {head} directive: {e}",
                             getattr(form, "line", None), getattr(form, "col", None))
    for form in deferred_actions:
        registry.register(_parse_action(form))
    pack.warnings.extend(registry.consistency_warnings())
    return pack


def _parse_action(form) -> ActionDescription:
    name = str(form[1])
    fields = {}
    for part in form[2:]:
        fields[str(part[0])] = part
    roles_form = fields.get("roles")
    if roles_form is None:
        raise ParseError(f"action {name} needs (roles ...)", form.line, form.col)
    args = []
    for r in roles_form[1:]:
        args.append((str(r[0]), parse_term(r[1])))
    signature = T.PrimAct(name, tuple(args))

    def formula_field(key):
        f = fields.get(key)
        return parse_formula(f[1]) if f is not None else T.TRUE

    body = parse_action_expr(fields["body"][1]) if "body" in fields else None
    benefits = frozenset(str(x) for x in fields["benefits"][1:]) if "benefits" in fields \
        else frozenset()
    required = tuple(str(x) for x in fields["required"][1:]) if "required" in fields else ()
    prior = float(str(fields["prior"][1])) if "prior" in fields else None
    return ActionDescription(
        name=name, signature=signature,
        precondition=formula_field("pre"), effect=formula_field("effect"),
        constraint=formula_field("constraint"), applicability=formula_field("ac"),
        body=body, benefits=benefits, required=required,
        external="external" in fields, prior=prior,
    )

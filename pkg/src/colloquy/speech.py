"""Domain-independent speech acts as planning operators.

Each act is an ActionDescription whose effect describes the mental state
the speaker wants the listener to be in.  Effects of speech acts are
never assumed true by execution alone; observing one licenses attributing
the speaker a persistent goal toward its effect (collapsed to the effect
itself for trusted speakers).

Also home to the identification step for incoming user utterances: full
acts pass through, bare payloads (a value, yes/no, "why", "i don't know")
are resolved against the pending intended effects in the dialogue
context.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import terms as T
from .actions import ActionDescription, ActionRegistry
from .syntax import print_term

SPEECH_ACT_TYPES = {
    "inform", "informref", "assert", "assertref", "whq", "ynq", "request",
    "verifyref", "informif", "confirm", "greet", "emote",
}
DESCR_ACTS = {"whq", "informref", "assertref", "verifyref"}
FORMULA_ACTS = {"inform", "assert", "ynq", "informif", "confirm"}
QUESTION_ACTS = {"whq", "ynq", "request", "verifyref"}


@dataclass
class SpeechActInstance:
    act_type: str
    speaker: T.Term
    listener: T.Term
    content: object  # Formula, Descr, or ActionExpr depending on type
    turn: int = 0

    def __post_init__(self):
        if self.act_type not in SPEECH_ACT_TYPES:
            raise ValueError(f"unknown speech act type {self.act_type}")
        if self.act_type in DESCR_ACTS and not isinstance(self.content, T.Descr):
            raise ValueError(f"{self.act_type} content must be a description")
        if self.act_type == "request" and not isinstance(
                self.content, (T.PrimAct, T.SeqAct, T.ConditAct, T.DisjAct)):
            raise ValueError("request content must be an action expression")

    def to_prim(self) -> T.PrimAct:
        role = "descr" if self.act_type in DESCR_ACTS else (
            "act" if self.act_type == "request" else "content")
        return T.PrimAct(self.act_type, (
            ("agent", self.speaker), ("listener", self.listener), (role, self.content)))

    @staticmethod
    def from_prim(prim: T.PrimAct, turn: int = 0) -> "SpeechActInstance":
        content = prim.arg("descr")
        if content is None:
            content = prim.arg("act")
        if content is None:
            content = prim.arg("content")
        return SpeechActInstance(prim.name, prim.arg("agent"), prim.arg("listener"),
                                 content, turn)

    def key(self) -> str:
        return f"{self.act_type} {print_term(self.speaker)} {print_term(self.listener)}"


# ---------------------------------------------------------------------------
# registration
# ---------------------------------------------------------------------------


def _v(name, concept=T.TOP):
    return T.Var(name, concept)


def register_speech_acts(registry: ActionRegistry):
    # anything can be addressed; who actually knows or acts is settled by
    # proving the act's precondition, not by the listener's type
    S, L = _v("S", "agent"), _v("L")
    C = _v("C")
    DV, DP = _v("DV"), _v("DP")
    D = T.Descr(DV, DP)

    def sig(name, content_role="content", content_var=None):
        return T.PrimAct(name, (("agent", S), ("listener", L),
                                (content_role, content_var if content_var is not None else C)))

    registry.register(ActionDescription(
        "inform", sig("inform"),
        precondition=T.Bel(S, C), effect=T.Bel(L, C)))
    registry.register(ActionDescription(
        "assert", sig("assert"),
        precondition=T.Bel(S, C), effect=T.Bel(L, T.Bel(S, C))))
    registry.register(ActionDescription(
        "informref", sig("informref", "descr", D),
        precondition=T.KnowRef(S, DV, DP), effect=T.KnowRef(L, DV, DP)))
    registry.register(ActionDescription(
        "assertref", sig("assertref", "descr", D),
        precondition=T.KnowRef(S, DV, DP), effect=T.KnowRef(L, DV, T.Bel(S, DP))))
    registry.register(ActionDescription(
        "whq", sig("whq", "descr", D),
        precondition=T.KnowRef(L, DV, DP), effect=T.KnowRef(S, DV, DP),
        body=T.SeqAct((
            T.PrimAct("request", (("agent", S), ("listener", L),
                                  ("act", T.PrimAct("informref", (("agent", L), ("listener", S), ("descr", D)))))),
            T.PrimAct("informref", (("agent", L), ("listener", S), ("descr", D))),
        ))))
    registry.register(ActionDescription(
        "ynq", sig("ynq"),
        precondition=T.KnowIf(L, C), effect=T.KnowIf(S, C),
        body=T.SeqAct((
            T.PrimAct("request", (("agent", S), ("listener", L),
                                  ("act", T.PrimAct("informif", (("agent", L), ("listener", S), ("content", C)))))),
            T.PrimAct("informif", (("agent", L), ("listener", S), ("content", C))),
        ))))
    registry.register(ActionDescription(
        "informif", sig("informif"),
        precondition=T.KnowIf(S, C), effect=T.KnowIf(L, C),
        body=T.DisjAct(
            T.PrimAct("inform", (("agent", S), ("listener", L), ("content", C))),
            T.PrimAct("inform", (("agent", S), ("listener", L), ("content", T.Not(C)))),
        )))
    registry.register(ActionDescription(
        "verifyref", sig("verifyref", "descr", D),
        precondition=T.KnowRef(L, DV, DP), effect=T.KnowRef(S, DV, T.Bel(L, DP)),
        body=T.SeqAct((
            T.PrimAct("request", (("agent", S), ("listener", L),
                                  ("act", T.PrimAct("assertref", (("agent", L), ("listener", S), ("descr", D)))))),
            T.PrimAct("assertref", (("agent", L), ("listener", S), ("descr", D))),
        ))))
    AV = _v("AV")
    registry.register(ActionDescription(
        "request", sig("request", "act", AV),
        # precondition/applicability computed from the embedded act by the
        # planner; the effect is the listener's intending the act
        effect=T.Intend(L, T.Occurrence(T.ActionRef(L, AV, T.TRUE),
                                        _v("Loc"), _v("Time")))))
    registry.register(ActionDescription(
        "confirm", sig("confirm"),
        precondition=T.Bel(S, C), effect=T.Bel(L, C)))
    registry.register(ActionDescription(
        "greet", sig("greet"),
        effect=T.Pred("greeted", (S, L))))
    registry.register(ActionDescription(
        "emote", sig("emote"),
        effect=T.Pred("expressed", (S, L, C))))


def is_speech_act(name: str) -> bool:
    return name in SPEECH_ACT_TYPES


# ---------------------------------------------------------------------------
# incoming-utterance payloads (produced by the surface parser)
# ---------------------------------------------------------------------------


@dataclass
class ActLF:
    prim: T.PrimAct


@dataclass
class ValueLF:
    value: T.Term


@dataclass
class PolarLF:
    positive: bool


@dataclass
class WhyLF:
    pass


@dataclass
class DontKnowLF:
    pass


@dataclass
class OverAnswerLF:
    value: T.Term
    constraint: T.Descr


@dataclass
class ConstraintLF:
    constraint: T.Descr


class UnresolvedAnswer(Exception):
    """No pending effect matched a bare answer payload."""


@dataclass
class IdentifiedAct:
    act: SpeechActInstance
    resolved_entry: object = None       # pending-effect entry consumed, if any
    constraint: T.Descr | None = None   # over-answer leftover to attach
    dont_know: bool = False
    binding: tuple | None = None        # (slot Var, answer value)


def identify_user_speech_act(lf, ctx, speaker, listener, ontology, turn=0) -> IdentifiedAct:
    """Map a parsed logical form to the surface act the user performed.

    Bare payloads resolve against pending intended effects, newest first;
    the variable's type filters candidates before recency applies.
    """
    if isinstance(lf, ActLF):
        return IdentifiedAct(SpeechActInstance.from_prim(lf.prim, turn))
    if isinstance(lf, WhyLF):
        # question about the reason for the most recent system directive
        ref = ctx.last_system_directive()
        if ref is None:
            raise UnresolvedAnswer("no prior system act to explain")
        reason = T.Var(T.fresh_name("R"))
        body = T.Pred("reason_of", (ref.occ.act, reason))
        return IdentifiedAct(SpeechActInstance(
            "whq", speaker, listener, T.Descr(reason, body), turn))
    if isinstance(lf, PolarLF):
        entry, effect = ctx.match_knowif()
        if entry is None:
            raise UnresolvedAnswer("no pending yes/no question")
        ctx.resolve(entry)
        content = effect.body if lf.positive else T.Not(effect.body)
        act = SpeechActInstance("inform", speaker, listener, content, turn)
        return IdentifiedAct(act, resolved_entry=entry)
    if isinstance(lf, DontKnowLF):
        entry, effect = ctx.match_knowref_any()
        if entry is None:
            raise UnresolvedAnswer("no pending question to disclaim")
        ctx.resolve(entry)
        return IdentifiedAct(SpeechActInstance(
            "inform", speaker, listener,
            T.Not(T.KnowRef(speaker, effect.var, effect.body)), turn),
            resolved_entry=entry, dont_know=True)
    if isinstance(lf, ConstraintLF):
        entry, effect = ctx.match_knowref_any()
        if entry is None:
            raise UnresolvedAnswer("no pending slot for a constraint")
        act = SpeechActInstance(
            "inform", speaker, listener,
            T.Pred("constraint_stated", (lf.constraint,)), turn)
        return IdentifiedAct(act, constraint=lf.constraint)
    if isinstance(lf, (ValueLF, OverAnswerLF)):
        value = lf.value
        entry, effect = ctx.match_knowref(value, ontology)
        if entry is None:
            raise UnresolvedAnswer(f"no pending slot accepts {print_term(value)}")
        ctx.resolve(entry)
        act = SpeechActInstance(
            "informref", speaker, listener, T.Descr(effect.var, effect.body), turn)
        constraint = lf.constraint if isinstance(lf, OverAnswerLF) else None
        return IdentifiedAct(act, resolved_entry=entry, constraint=constraint,
                             binding=(effect.var, value))
    raise IdentifiedActError(lf)


class IdentifiedActError(UnresolvedAnswer):
    def __init__(self, lf):
        super().__init__(f"cannot identify {lf!r}")

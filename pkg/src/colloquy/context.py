"""Chronological dialogue context: done acts and pending intended effects.

Answer resolution scans pending effects newest first.  Type compatibility
of the answer value against the pending slot variable is checked before
recency, so a bare value can reach past a newer question of the wrong
type.  Each pending entry resolves at most once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import terms as T
from .ontology import Ontology

OPEN = "open"
RESOLVED = "resolved"
WITHDRAWN = "withdrawn"


@dataclass
class DoneAct:
    turn: int
    speaker: T.Term
    listener: T.Term
    act_type: str
    occ: T.Occurrence
    record_id: int | None = None


@dataclass
class PendingEffect:
    turn: int
    effect: object          # KnowIf or KnowRef formula (speaker's wanted state)
    record_id: int | None   # the goal record the question serves
    status: str = OPEN
    asked_by: str = "sys"
    act: object = None      # the question as asked, for repetition


class DialogueContext:
    def __init__(self, system: str = "sys"):
        self.system = system
        self.done_acts: list[DoneAct] = []
        self.pending: list[PendingEffect] = []
        self.topic_terms: set[str] = set()

    # -- history ---------------------------------------------------------

    def record_act(self, done: DoneAct):
        self.done_acts.append(done)

    def history_query(self, predicate) -> list[DoneAct]:
        return [d for d in self.done_acts if predicate(d)]

    def last_system_directive(self):
        from .speech import QUESTION_ACTS
        for d in reversed(self.done_acts):
            if (isinstance(d.speaker, T.Atom) and d.speaker.name == self.system
                    and d.act_type in QUESTION_ACTS):
                return d
        return None

    # -- pending effects ---------------------------------------------------

    def push_effect(self, effect, record_id, turn, asked_by="sys"):
        self.pending.append(PendingEffect(turn, effect, record_id, OPEN, asked_by))

    def open_entries(self):
        return [p for p in self.pending if p.status == OPEN]

    def withdraw_for_record(self, record_id):
        for p in self.pending:
            if p.record_id == record_id and p.status == OPEN:
                p.status = WITHDRAWN

    def resolve(self, entry: PendingEffect):
        if entry.status != OPEN:
            raise ValueError("pending effect already closed")
        entry.status = RESOLVED

    def match_knowref(self, value, ontology: Ontology):
        """Newest open knowref effect whose variable accepts ``value``."""
        for p in reversed(self.pending):
            if p.status != OPEN or not isinstance(p.effect, T.KnowRef):
                continue
            var = p.effect.var
            c = T.concept_of(value, ontology)
            if ontology.compatible(c, var.concept) is None:
                continue
            return p, p.effect
        return None, None

    def match_knowif(self):
        for p in reversed(self.pending):
            if p.status == OPEN and isinstance(p.effect, T.KnowIf):
                return p, p.effect
        return None, None

    def match_knowref_any(self):
        for p in reversed(self.pending):
            if p.status == OPEN and isinstance(p.effect, T.KnowRef):
                return p, p.effect
        return None, None

"""Plan graph: typed edges over knowledge-base records, plus export.

Edge types: ``relativized-to`` (child depends on parent), ``achieves``
(act toward the effect it serves), ``enables`` (precondition goal toward
the act it enables), ``decomposes`` (body toward parent act), and
``dependency-unknown`` for recognized higher-level acts whose own support
is not yet known.
"""

from __future__ import annotations

from dataclasses import dataclass

from .kb import KnowledgeBase, RETRACTED
from .syntax import canonical

EDGE_TYPES = ("relativized-to", "achieves", "enables", "decomposes", "dependency-unknown")

COLOR_LEGEND = {
    "done": "green",
    "pgoal": "blue",
    "knowif-goal": "blue",
    "knowref-goal": "blue",
    "intend": "purple",
    "bel": "straw",
    "fact": "straw",
    "default": "straw",
    "doing": "green",
}


@dataclass(frozen=True)
class Edge:
    etype: str
    src: int
    dst: int | None  # None renders as "_": dependency not yet known


class PlanGraph:
    def __init__(self, kb: KnowledgeBase):
        self.kb = kb
        self.edges: list[Edge] = []
        self._seen: set = set()

    def add_edge(self, etype: str, src: int, dst: int | None):
        if etype not in EDGE_TYPES:
            raise ValueError(f"unknown edge type {etype}")
        e = Edge(etype, src, dst)
        if e not in self._seen:
            self._seen.add(e)
            self.edges.append(e)

    def parents(self, rid: int) -> list[int]:
        return [e.dst for e in self.edges
                if e.src == rid and e.dst is not None and e.etype == "relativized-to"]

    def children(self, rid: int) -> list[int]:
        return [e.src for e in self.edges
                if e.dst == rid and e.etype == "relativized-to"]

    def ancestors(self, rid: int) -> list[int]:
        """Breadth-first relativization ancestors, nearest first."""
        out, frontier, seen = [], [rid], {rid}
        while frontier:
            nxt = []
            for r in frontier:
                rec = self.kb.records.get(r)
                parent_ids = list(self.parents(r))
                if rec is not None:
                    parent_ids += [p for p in rec.parent_ids() if p not in parent_ids]
                for p in parent_ids:
                    if p not in seen and p in self.kb.records:
                        seen.add(p)
                        out.append(p)
                        nxt.append(p)
            frontier = nxt
        return out

    def export(self) -> str:
        lines = ["(legend (done green) (pgoal blue) (intend purple) (bel straw))"]
        for rec in sorted(self.kb.records.values(), key=lambda r: r.rid):
            if rec.status == RETRACTED:
                continue
            f = self.kb.equalities.resolve_term(rec.formula)
            lines.append(
                f"(node {rec.rid} {rec.kind} {rec.agent} {rec.status} {rec.prob} {canonical(f)})")
        for e in self.edges:
            src = self.kb.records.get(e.src)
            if src is None or src.status == RETRACTED:
                continue
            dst = "_" if e.dst is None else e.dst
            lines.append(f"(edge {e.etype} {e.src} {dst})")
        return "\n".join(lines) + "\n"

    def node_counts(self) -> dict:
        out: dict[str, int] = {}
        for rec in self.kb.records.values():
            if rec.status != RETRACTED:
                out[rec.kind] = out.get(rec.kind, 0) + 1
        return out

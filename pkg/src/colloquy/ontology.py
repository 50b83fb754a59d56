"""Single-inheritance concept ontology with a wildcard root.

Concepts form a tree rooted at ``top``.  Every typed variable carries a
concept name; unification consults ``compatible`` to decide whether a
variable may bind a term.  Constants (atoms) can be declared as instances
of a concept.
"""

from __future__ import annotations

TOP = "top"


class Ontology:
    def __init__(self):
        self._parent: dict[str, str] = {TOP: TOP}
        self._instances: dict[str, str] = {}

    def add_concept(self, name: str, parent: str = TOP) -> None:
        if parent not in self._parent:
            self.add_concept(parent)
        existing = self._parent.get(name)
        if existing is not None and existing != parent and name != TOP:
            raise ValueError(f"concept {name} already under {existing}")
        self._parent.setdefault(name, parent)

    def has_concept(self, name: str) -> bool:
        return name in self._parent

    def ensure(self, name: str) -> str:
        """Register an unknown concept directly under the root."""
        if name not in self._parent:
            self._parent[name] = TOP
        return name

    def add_instance(self, atom_name: str, concept: str) -> None:
        self.ensure(concept)
        self._instances[atom_name] = concept

    def concept_of_atom(self, atom_name: str) -> str:
        return self._instances.get(atom_name, TOP)

    def is_subconcept(self, sub: str, sup: str) -> bool:
        if sup == TOP:
            return True
        seen = set()
        cur = sub
        while cur not in seen:
            if cur == sup:
                return True
            seen.add(cur)
            cur = self._parent.get(cur, TOP)
        return False

    def compatible(self, a: str, b: str) -> str | None:
        """Most specific of two concepts when comparable, else None."""
        if a == b:
            return a
        if self.is_subconcept(a, b):
            return a
        if self.is_subconcept(b, a):
            return b
        return None

    def instances_of(self, concept: str) -> list[str]:
        return sorted(
            name for name, c in self._instances.items() if self.is_subconcept(c, concept)
        )


def base_ontology() -> Ontology:
    """Concepts every domain pack can rely on."""
    ont = Ontology()
    for name, parent in [
        ("agent", TOP),
        ("person", "agent"),
        ("organization", "agent"),
        ("place", TOP),
        ("business", "organization"),
        ("number", TOP),
        ("years", "number"),
        ("miles", "number"),
        ("count", "number"),
        ("time", TOP),
        ("date", TOP),
        ("text", TOP),
        ("action_concept", TOP),
    ]:
        ont.add_concept(name, parent)
    return ont

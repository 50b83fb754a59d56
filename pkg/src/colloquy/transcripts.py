"""Transcript canonicalization for golden-file comparison.

Generated variable names differ from run to run; a canonical transcript
renames the variables of each line in first-occurrence order after
resolving equalities, making two behaviorally identical runs compare
bit-for-bit equal.
"""

from __future__ import annotations

from .syntax import canonical_renamed, parse


def canonical_line(entry) -> str:
    lf = parse(entry.lf)
    renamed = canonical_renamed(lf)
    return (f"(turn {entry.turn} {entry.speaker} {entry.listener} "
            f'{entry.act_type} {renamed} "{entry.text}")')


def canonical_transcript(sess) -> str:
    return "\n".join(canonical_line(e) for e in sess.transcript) + "\n"

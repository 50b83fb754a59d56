"""Command-line front end: scripted replay and an interactive console.

Replay mode feeds a script of user utterances through one session and,
given an expected transcript, exits 0 on an exact match, 2 on the first
differing turn, 3 on a load error.  The interactive console adds the
inspection commands ``:plan``, ``:kb``, ``:explain``, and ``:quit``.
"""

from __future__ import annotations

import argparse
import sys
from decimal import Decimal
from pathlib import Path

from .domain import load_pack
from .executive import Session
from .syntax import ParseError
from .transcripts import canonical_transcript


def build_session(args) -> Session:
    pack = load_pack(args.domain)
    threshold = Decimal(args.threshold) if args.threshold else None
    sess = Session(pack, threshold=threshold)
    sess.seed = args.seed
    return sess


def run_script(sess: Session, script_path: str) -> None:
    for raw in Path(script_path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        lf = sess.pack.parse(line, sess.user, sess.system)
        sess.step(lf, raw_text=line)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="colloquy")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a dialogue session")
    run.add_argument("--domain", default=None, help="domain pack file")
    run.add_argument("--script", default=None, help="file of user utterances")
    run.add_argument("--expect", default=None, help="golden transcript to diff against")
    run.add_argument("--snapshot-dir", default=None)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--threshold", default=None)
    args = parser.parse_args(argv)

    try:
        sess = build_session(args)
    except (ParseError, OSError) as e:
        print(f"load error: {e}", file=sys.stderr)
        return 3

    if args.script:
        try:
            run_script(sess, args.script)
        except (ParseError, OSError) as e:
            print(f"load error: {e}", file=sys.stderr)
            return 3
        produced = canonical_transcript(sess)
        print(produced, end="")
        if args.snapshot_dir:
            outdir = Path(args.snapshot_dir)
            outdir.mkdir(parents=True, exist_ok=True)
            (outdir / "kb.txt").write_text(sess.kb.snapshot())
            (outdir / "plan.txt").write_text(sess.graph.export())
            (outdir / "transcript.txt").write_text(produced)
        if args.expect:
            expected = Path(args.expect).read_text()
            if produced != expected:
                for i, (a, b) in enumerate(
                        zip(produced.splitlines(), expected.splitlines()), start=1):
                    if a != b:
                        print(f"transcript diff at line {i}:", file=sys.stderr)
                        print(f"  produced: {a}", file=sys.stderr)
                        print(f"  expected: {b}", file=sys.stderr)
                        return 2
                print("transcript diff: length mismatch", file=sys.stderr)
                return 2
        return 0

    return repl(sess)


def repl(sess: Session) -> int:
    print("type an utterance, or :plan :kb :explain :quit")
    while True:
        try:
            line = input("you> ").strip()
        except EOFError:
            return 0
        if not line:
            continue
        if line == ":quit":
            return 0
        if line == ":plan":
            print(sess.graph.export(), end="")
            continue
        if line == ":kb":
            print(sess.kb.snapshot(), end="")
            continue
        if line == ":explain":
            content, notes = sess.explain()
            if content is None:
                print(";", "; ".join(notes))
            else:
                from .syntax import canonical
                print(canonical(content))
            continue
        try:
            lf = sess.pack.parse(line, sess.user, sess.system)
        except ParseError as e:
            print(f"parse error: {e}")
            continue
        result = sess.step(lf, raw_text=line)
        for entry in result.emitted:
            if entry.speaker != sess.user.name:
                print(f"{entry.speaker}> {entry.text}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

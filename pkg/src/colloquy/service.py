"""Session service: the dialogue engine behind an HTTP JSON API.

Endpoints:

    POST   /sessions                     {domain?}        -> {session_id}
    POST   /sessions/{id}/utterances     {text}           -> system acts + graph delta
    GET    /sessions/{id}/plan                            -> plan graph with legend
    GET    /sessions/{id}/transcript
    GET    /sessions/{id}/kb
    POST   /sessions/{id}/explain        {act_id?}
    DELETE /sessions/{id}

Formulas travel as tagged nested objects mirroring the canonical syntax,
with the canonical text alongside for humans.  Each session's engine is
accessed under a lock; a second concurrent turn on the same session gets
409 (or queues, when COLLOQUY_QUEUE_TURNS is set).  Every observation and
emission is appended to a per-session event log for replay recovery.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import terms as T
from .domain import DEFAULT_PACK, load_pack
from .executive import Session
from .plangraph import COLOR_LEGEND
from .syntax import ParseError, canonical


def formula_json(node):
    """Tagged nested encoding mirroring the canonical syntax one to one."""
    if isinstance(node, T.Var):
        return {"t": "var", "name": node.name, "concept": node.concept}
    if isinstance(node, T.Atom):
        return {"t": "atom", "name": node.name}
    if isinstance(node, T.Num):
        return {"t": "num", "value": str(node.value), "unit": node.unit}
    if isinstance(node, T.Text):
        return {"t": "text", "value": node.value}
    if isinstance(node, T.TimeTerm):
        return {"t": "time", "kind": node.kind, "token": node.token}
    if isinstance(node, T.ListTerm):
        return {"t": "list", "items": [formula_json(i) for i in node.items]}
    tag = type(node).__name__.lower()
    out = {"t": tag}
    if isinstance(node, (T.Pred, T.Compound, T.PrimAct)):
        out["name"] = node.name if not isinstance(node, T.Compound) else node.functor
    kids = T.children(node)
    out["args"] = [formula_json(k) for k in kids]
    return out


class SessionBox:
    def __init__(self, session: Session, log_path: Path | None):
        self.session = session
        self.lock = threading.Lock()
        self.log_path = log_path

    def log_event(self, kind: str, payload: dict):
        if self.log_path is None:
            return
        with self.log_path.open("a") as fh:
            fh.write(json.dumps({"event": kind, **payload}) + "\n")


class UtteranceBody(BaseModel):
    text: str


class CreateBody(BaseModel):
    domain: str | None = None


class ExplainBody(BaseModel):
    act_id: int | None = None


def replay_session(pack, log_path: Path) -> Session:
    """Rebuild a session by re-feeding the logged observations."""
    sess = Session(pack)
    for line in log_path.read_text().splitlines():
        event = json.loads(line)
        if event.get("event") == "observation":
            text = event["text"]
            try:
                lf = sess.pack.parse(text, sess.user, sess.system)
            except ParseError:
                continue
            sess.step(lf, raw_text=text)
    return sess


def create_app(domain_dir: str | None = None, log_dir: str | None = None,
               queue_turns: bool | None = None) -> FastAPI:
    app = FastAPI(title="colloquy dialogue service", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    boxes: dict[str, SessionBox] = {}
    domain_dir = domain_dir or os.environ.get("DOMAIN_DIR")
    log_dir = log_dir or os.environ.get("SESSION_LOG_DIR")
    token = os.environ.get("COLLOQUY_TOKEN")
    if queue_turns is None:
        queue_turns = bool(os.environ.get("COLLOQUY_QUEUE_TURNS"))

    @app.middleware("http")
    async def check_token(request, call_next):
        if token and request.url.path.startswith("/sessions"):
            if request.headers.get("authorization") != f"Bearer {token}":
                from fastapi.responses import JSONResponse
                return JSONResponse({"detail": "missing or bad token"}, status_code=401)
        return await call_next(request)

    def get_box(session_id: str) -> SessionBox:
        box = boxes.get(session_id)
        if box is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return box

    @app.post("/sessions")
    def create_session(body: CreateBody):
        if body.domain:
            path = Path(domain_dir) / body.domain if domain_dir else Path(body.domain)
        else:
            path = DEFAULT_PACK
        try:
            pack = load_pack(path)
        except (ParseError, OSError) as e:
            raise HTTPException(status_code=422, detail=f"domain load failed: {e}")
        session_id = uuid.uuid4().hex[:12]
        log_path = Path(log_dir) / f"{session_id}.jsonl" if log_dir else None
        if log_path is not None:
            log_path.parent.mkdir(parents=True, exist_ok=True)
        boxes[session_id] = SessionBox(Session(pack), log_path)
        return {"session_id": session_id}

    @app.post("/sessions/{session_id}/utterances")
    def post_utterance(session_id: str, body: UtteranceBody):
        box = get_box(session_id)
        acquired = box.lock.acquire(blocking=queue_turns)
        if not acquired:
            raise HTTPException(status_code=409, detail="turn already in progress")
        try:
            sess = box.session
            before = set(sess.kb.records)
            try:
                lf = sess.pack.parse(body.text, sess.user, sess.system)
            except ParseError as e:
                raise HTTPException(status_code=422, detail=str(e))
            box.log_event("observation", {"text": body.text})
            result = sess.step(lf, raw_text=body.text)
            acts = [
                {
                    "turn": e.turn, "speaker": e.speaker, "listener": e.listener,
                    "act_type": e.act_type, "canonical_text": e.text, "lf": e.lf,
                }
                for e in result.emitted
            ]
            box.log_event("emissions", {"acts": acts})
            created = sorted(set(sess.kb.records) - before)
            return {
                "turn": sess.turn,
                "system_acts": [a for a in acts if a["speaker"] != sess.user.name],
                "graph_delta": {"created": created},
                "diagnostics": result.diagnostics,
            }
        finally:
            box.lock.release()

    @app.get("/sessions/{session_id}/plan")
    def get_plan(session_id: str):
        sess = get_box(session_id).session
        nodes = []
        for rec in sorted(sess.kb.records.values(), key=lambda r: r.rid):
            if rec.status == "retracted":
                continue
            f = sess.kb.resolve(rec.formula)
            nodes.append({
                "id": rec.rid, "kind": rec.kind, "agent": rec.agent,
                "status": rec.status, "probability": str(rec.prob),
                "formula": canonical(f), "lf": formula_json(f),
                "verbalization": canonical(f),
                "color": COLOR_LEGEND.get(rec.kind, "straw"),
            })
        edges = [
            {"type": e.etype, "from": e.src, "to": e.dst}
            for e in sess.graph.edges
            if e.src in sess.kb.records and sess.kb.records[e.src].status != "retracted"
        ]
        return {"legend": COLOR_LEGEND, "nodes": nodes, "edges": edges}

    @app.get("/sessions/{session_id}/transcript")
    def get_transcript(session_id: str):
        sess = get_box(session_id).session
        return {
            "entries": [
                {"turn": e.turn, "speaker": e.speaker, "listener": e.listener,
                 "act_type": e.act_type, "lf": e.lf, "text": e.text}
                for e in sess.transcript
            ]
        }

    @app.get("/sessions/{session_id}/kb")
    def get_kb(session_id: str):
        sess = get_box(session_id).session
        return {"snapshot": sess.kb.snapshot(),
                "revision_log": sess.kb.export_revision_log()}

    @app.post("/sessions/{session_id}/explain")
    def post_explain(session_id: str, body: ExplainBody):
        sess = get_box(session_id).session
        content, notes = sess.explain(body.act_id)
        return {
            "reason": canonical(content) if content is not None else None,
            "lf": formula_json(content) if content is not None else None,
            "notes": notes,
        }

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str):
        get_box(session_id)
        del boxes[session_id]
        return {"deleted": session_id}

    app.state.boxes = boxes
    return app


def main():
    import uvicorn
    port = int(os.environ.get("PORT", "8077"))
    uvicorn.run(create_app(), host="0.0.0.0", port=port)


if __name__ == "__main__":
    main()

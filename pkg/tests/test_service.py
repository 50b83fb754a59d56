import json
import threading
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from colloquy.service import create_app


@pytest.fixture()
def client(tmp_path):
    app = create_app(log_dir=str(tmp_path / "logs"))
    with TestClient(app) as c:
        c.log_dir = tmp_path / "logs"
        yield c


def new_session(client):
    return client.post("/sessions", json={}).json()["session_id"]


def test_session_lifecycle(client):
    sid = new_session(client)
    resp = client.post(f"/sessions/{sid}/utterances",
                       json={"text": "are there any covid vaccination centers nearby"})
    assert resp.status_code == 200
    data = resp.json()
    acts = [a["act_type"] for a in data["system_acts"]]
    assert acts == ["inform", "informref", "informref", "ynq"]
    assert data["graph_delta"]["created"]
    assert client.delete(f"/sessions/{sid}").status_code == 200
    assert client.get(f"/sessions/{sid}/plan").status_code == 404


def test_unknown_session_404(client):
    assert client.post("/sessions/nope/utterances", json={"text": "yes"}).status_code == 404


def test_parse_error_422_with_hint(client):
    sid = new_session(client)
    resp = client.post(f"/sessions/{sid}/utterances", json={"text": "gibberish input"})
    assert resp.status_code == 422
    assert "closest pattern" in resp.json()["detail"]


def test_plan_endpoint_is_pure_read(client):
    sid = new_session(client)
    client.post(f"/sessions/{sid}/utterances",
                json={"text": "are there any covid vaccination centers nearby"})
    kb_before = client.get(f"/sessions/{sid}/kb").json()["snapshot"]
    plan1 = client.get(f"/sessions/{sid}/plan").json()
    plan2 = client.get(f"/sessions/{sid}/plan").json()
    kb_after = client.get(f"/sessions/{sid}/kb").json()["snapshot"]
    assert plan1 == plan2
    assert kb_before == kb_after


def test_plan_has_legend_and_colors(client):
    sid = new_session(client)
    client.post(f"/sessions/{sid}/utterances",
                json={"text": "are there any covid vaccination centers nearby"})
    plan = client.get(f"/sessions/{sid}/plan").json()
    assert plan["legend"]["done"] == "green"
    assert plan["legend"]["pgoal"] == "blue"
    assert plan["legend"]["intend"] == "purple"
    assert plan["legend"]["bel"] == "straw"
    kinds = {n["kind"] for n in plan["nodes"]}
    assert {"done", "intend"} <= kinds
    assert kinds & {"pgoal", "knowif-goal", "knowref-goal"}
    for n in plan["nodes"]:
        assert n["color"] == plan["legend"].get(n["kind"], "straw")


def test_explain_endpoint(client):
    sid = new_session(client)
    for text in ("are there any covid vaccination centers nearby", "yes"):
        client.post(f"/sessions/{sid}/utterances", json={"text": text})
    out = client.post(f"/sessions/{sid}/explain", json={}).json()
    assert out["reason"] == "(knowif sys (eligible u1 covid_vaccine))"


def test_concurrent_turn_conflict_409(client):
    sid = new_session(client)
    box = client.app.state.boxes[sid]
    box.lock.acquire()
    try:
        resp = client.post(f"/sessions/{sid}/utterances", json={"text": "yes"})
        assert resp.status_code == 409
    finally:
        box.lock.release()


def test_event_log_written(client):
    sid = new_session(client)
    client.post(f"/sessions/{sid}/utterances",
                json={"text": "are there any covid vaccination centers nearby"})
    log = (client.log_dir / f"{sid}.jsonl").read_text().splitlines()
    events = [json.loads(l)["event"] for l in log]
    assert events[0] == "observation"
    assert "emissions" in events


def test_transcript_endpoint(client):
    sid = new_session(client)
    client.post(f"/sessions/{sid}/utterances",
                json={"text": "are there any covid vaccination centers nearby"})
    entries = client.get(f"/sessions/{sid}/transcript").json()["entries"]
    assert entries[0]["speaker"] == "u1"
    assert len(entries) == 5


def test_replay_recovery(tmp_path):
    from colloquy.domain import load_pack
    from colloquy.service import replay_session

    app = create_app(log_dir=str(tmp_path))
    with TestClient(app) as client:
        sid = client.post("/sessions", json={}).json()["session_id"]
        for text in ("are there any covid vaccination centers nearby", "yes"):
            client.post(f"/sessions/{sid}/utterances", json={"text": text})
        live = client.get(f"/sessions/{sid}/transcript").json()["entries"]
    recovered = replay_session(load_pack(), tmp_path / f"{sid}.jsonl")
    again = [
        {"turn": e.turn, "speaker": e.speaker, "listener": e.listener,
         "act_type": e.act_type, "lf": e.lf, "text": e.text}
        for e in recovered.transcript
    ]
    assert [ (e["turn"], e["act_type"], e["text"]) for e in again ] == \
        [ (e["turn"], e["act_type"], e["text"]) for e in live ]


def test_static_bearer_token(monkeypatch):
    monkeypatch.setenv("COLLOQUY_TOKEN", "hunter2")
    app = create_app()
    with TestClient(app) as client:
        assert client.post("/sessions", json={}).status_code == 401
        ok = client.post("/sessions", json={},
                         headers={"Authorization": "Bearer hunter2"})
        assert ok.status_code == 200

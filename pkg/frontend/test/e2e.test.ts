// Against the real dialogue service: the golden script round-trips through
// the chat client and the plan inspector sees the engine's own legend.

import assert from "node:assert/strict";
import { spawn, type ChildProcess } from "node:child_process";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { after, before, test } from "node:test";
import { fileURLToPath } from "node:url";

import { ApiClient } from "../src/api.js";
import { nodeColor } from "../src/colors.js";
import { renderGraph } from "../src/graphView.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const REPO = join(HERE, "..", "..", "..");
const PORT = 8191;
const BASE = `http://127.0.0.1:${PORT}`;

const SCRIPT = readFileSync(
  join(REPO, "tests", "data", "vaccination_script.txt"), "utf-8")
  .split("\n").map((l) => l.trim()).filter(Boolean);

const GOLDEN = readFileSync(
  join(REPO, "tests", "data", "golden_transcript.txt"), "utf-8")
  .split("\n").filter(Boolean);

// Frozen from the engine after the intention-confirmation exchange
// (the user's "yes"): node counts per kind in the plan display.
const TURN4_FIXTURE: Record<string, number> = {
  bel: 8, default: 5, done: 9, fact: 9, intend: 10,
  "knowif-goal": 14, "knowref-goal": 8, pgoal: 2,
};

let service: ChildProcess;

before(async () => {
  service = spawn("python3", ["-m", "colloquy.service"], {
    cwd: REPO,
    env: { ...process.env, PORT: String(PORT) },
    stdio: "ignore",
  });
  for (let i = 0; i < 120; i++) {
    try {
      const r = await fetch(`${BASE}/openapi.json`);
      if (r.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((res) => setTimeout(res, 250));
  }
  throw new Error("service never came up");
});

after(() => {
  service.kill();
});

interface GoldenLine {
  turn: number;
  speaker: string;
  listener: string;
  actType: string;
  text: string;
}

function parseGoldenLine(line: string): GoldenLine {
  const m = line.match(/^\(turn (\d+) (\S+) (\S+) (\S+) .* "(.*)"\)$/);
  assert.ok(m, `unparseable golden line: ${line}`);
  return { turn: Number(m[1]), speaker: m[2], listener: m[3],
           actType: m[4], text: m[5] };
}

test("chat round trip reproduces the golden transcript", async () => {
  const api = new ApiClient(BASE);
  const sid = await api.createSession();
  for (const line of SCRIPT) {
    const resp = await api.sendUtterance(sid, line);
    assert.ok(Array.isArray(resp.system_acts));
  }
  const entries = await api.getTranscript(sid);
  const golden = GOLDEN.map(parseGoldenLine);
  assert.equal(entries.length, golden.length);
  entries.forEach((e, i) => {
    const g = golden[i];
    assert.equal(e.turn, g.turn, `turn at line ${i + 1}`);
    assert.equal(e.speaker, g.speaker, `speaker at line ${i + 1}`);
    assert.equal(e.listener, g.listener, `listener at line ${i + 1}`);
    assert.equal(e.act_type, g.actType, `act at line ${i + 1}`);
    assert.equal(e.text, g.text, `text at line ${i + 1}`);
  });
});

test("plan inspector colors match the engine legend on the confirmation fixture", async () => {
  const api = new ApiClient(BASE);
  const sid = await api.createSession();
  for (const line of SCRIPT.slice(0, 2)) {
    await api.sendUtterance(sid, line);
  }
  const plan = await api.getPlan(sid);
  assert.equal(plan.legend["done"], "green");
  assert.equal(plan.legend["pgoal"], "blue");
  assert.equal(plan.legend["intend"], "purple");
  assert.equal(plan.legend["bel"], "straw");
  const counts: Record<string, number> = {};
  for (const n of plan.nodes) {
    counts[n.kind] = (counts[n.kind] ?? 0) + 1;
    assert.equal(n.color, nodeColor(n.kind),
      `node ${n.id} (${n.kind}) color drifted from the legend`);
  }
  assert.deepEqual(counts, TURN4_FIXTURE);
  const svg = renderGraph(plan.nodes, plan.edges);
  const rendered = Number((svg.match(/data-nodes="(\d+)"/) ?? [])[1]);
  assert.equal(rendered, plan.nodes.length);
});

test("explain through the service gives the eligibility reason", async () => {
  const api = new ApiClient(BASE);
  const sid = await api.createSession();
  for (const line of SCRIPT.slice(0, 2)) {
    await api.sendUtterance(sid, line);
  }
  const out = await api.explain(sid);
  assert.equal(out.reason, "(knowif sys (eligible u1 covid_vaccine))");
});

test("a parse failure surfaces as a 422 with a hint", async () => {
  const api = new ApiClient(BASE);
  const sid = await api.createSession();
  await assert.rejects(
    api.sendUtterance(sid, "quantum flapdoodle"),
    (e: any) => e.status === 422 && /closest pattern/.test(e.detail));
});

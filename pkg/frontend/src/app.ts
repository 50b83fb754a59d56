// Browser wiring: one session per tab, one turn in flight at a time; the
// plan pane re-polls after every turn, and a refresh rebuilds everything
// from /transcript and /plan alone.

import { ApiClient, ApiError } from "./api.js";
import { QUICK_REPLIES, renderParseError, renderTranscript } from "./chatView.js";
import { nodeDetail, renderGraph } from "./graphView.js";
import type { PlanResponse } from "./types.js";

const USER = "u1";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing #${id}`);
  return found as T;
}

export async function start(base: string): Promise<void> {
  const api = new ApiClient(base);
  const params = new URLSearchParams(location.search);
  let sessionId = params.get("session");
  if (!sessionId) {
    sessionId = await api.createSession();
    params.set("session", sessionId);
    history.replaceState(null, "", `?${params}`);
  }
  let inFlight = false;
  let lastPlan: PlanResponse | null = null;

  const chat = el<HTMLDivElement>("chat");
  const plan = el<HTMLDivElement>("plan");
  const detail = el<HTMLDivElement>("detail");
  const input = el<HTMLInputElement>("utterance");
  const send = el<HTMLButtonElement>("send");
  const quick = el<HTMLDivElement>("quick");

  quick.innerHTML = QUICK_REPLIES
    .map((q) => `<button class="quick" data-text="${q}">${q}</button>`).join("");

  async function refresh(): Promise<void> {
    const [entries, planResp] = await Promise.all([
      api.getTranscript(sessionId!),
      api.getPlan(sessionId!),
    ]);
    lastPlan = planResp;
    chat.innerHTML = renderTranscript(entries, USER);
    chat.scrollTop = chat.scrollHeight;
    plan.innerHTML = renderGraph(planResp.nodes, planResp.edges);
    for (const g of plan.querySelectorAll<SVGGElement>("g.node")) {
      g.addEventListener("click", () => {
        const id = Number(g.dataset.id);
        const node = lastPlan?.nodes.find((n) => n.id === id);
        if (node) detail.innerHTML = nodeDetail(node, [`record ${id}`]);
      });
    }
    for (const b of chat.querySelectorAll<HTMLButtonElement>("button.explain")) {
      b.addEventListener("click", async () => {
        const out = await api.explain(sessionId!);
        detail.innerHTML = `<div class="detail"><h3>because</h3><p>${out.reason ?? "(no reason found)"}</p></div>`;
      });
    }
  }

  async function submit(text: string): Promise<void> {
    if (inFlight || !text.trim()) return;
    inFlight = true;
    send.disabled = true;
    input.disabled = true;
    try {
      await api.sendUtterance(sessionId!, text.trim());
    } catch (e) {
      if (e instanceof ApiError && e.status === 422) {
        chat.insertAdjacentHTML("beforeend", renderParseError(e.detail));
      } else {
        throw e;
      }
    } finally {
      inFlight = false;
      send.disabled = false;
      input.disabled = false;
    }
    input.value = "";
    await refresh();
  }

  send.addEventListener("click", () => void submit(input.value));
  input.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") void submit(input.value);
  });
  quick.addEventListener("click", (ev) => {
    const target = ev.target as HTMLElement;
    const text = target.dataset?.text;
    if (text) void submit(text);
  });

  await refresh();
}

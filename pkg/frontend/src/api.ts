// Thin client for the dialogue service; the UI holds no state beyond the
// session id, so everything here is a plain request/response call.

import type {
  ExplainResponse, PlanResponse, TranscriptEntry, UtteranceResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`${status}: ${detail}`);
  }
}

async function expectOk(resp: Response): Promise<any> {
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    throw new ApiError(resp.status, body.detail ?? resp.statusText);
  }
  return body;
}

export class ApiClient {
  constructor(private base: string) {}

  async createSession(domain?: string): Promise<string> {
    const resp = await fetch(`${this.base}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(domain ? { domain } : {}),
    });
    const body = await expectOk(resp);
    return body.session_id;
  }

  async sendUtterance(sessionId: string, text: string): Promise<UtteranceResponse> {
    const resp = await fetch(`${this.base}/sessions/${sessionId}/utterances`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text }),
    });
    return expectOk(resp);
  }

  async getPlan(sessionId: string): Promise<PlanResponse> {
    return expectOk(await fetch(`${this.base}/sessions/${sessionId}/plan`));
  }

  async getTranscript(sessionId: string): Promise<TranscriptEntry[]> {
    const body = await expectOk(
      await fetch(`${this.base}/sessions/${sessionId}/transcript`));
    return body.entries;
  }

  async explain(sessionId: string, actId?: number): Promise<ExplainResponse> {
    const resp = await fetch(`${this.base}/sessions/${sessionId}/explain`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(actId === undefined ? {} : { act_id: actId }),
    });
    return expectOk(resp);
  }
}

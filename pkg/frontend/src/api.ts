// Thin fetch wrappers over the session endpoints.

import type { MoveJson, StatePayload, StatsRowJson, SubmitResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
  ) {
    super(`${status}: ${code}`);
  }
}

export interface Transport {
  createSession(plan?: string): Promise<string>;
  getState(sessionId: string): Promise<StatePayload>;
  submitMove(sessionId: string, move: MoveJson): Promise<SubmitResponse>;
  getStats(sessionId: string): Promise<StatsRowJson[]>;
}

async function parseError(resp: Response): Promise<never> {
  let code = resp.statusText;
  try {
    const body = await resp.json();
    if (body && typeof body.error === "string") {
      code = body.error;
    }
  } catch {
    // keep the status text
  }
  throw new ApiError(resp.status, code);
}

export class HttpTransport implements Transport {
  constructor(private base: string = "") {}

  async createSession(plan?: string): Promise<string> {
    const resp = await fetch(`${this.base}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(plan ? { plan } : {}),
    });
    if (!resp.ok) {
      await parseError(resp);
    }
    return (await resp.json()).session_id as string;
  }

  async getState(sessionId: string): Promise<StatePayload> {
    const resp = await fetch(`${this.base}/sessions/${sessionId}/state`);
    if (!resp.ok) {
      await parseError(resp);
    }
    return (await resp.json()) as StatePayload;
  }

  async submitMove(sessionId: string, move: MoveJson): Promise<SubmitResponse> {
    const resp = await fetch(`${this.base}/sessions/${sessionId}/moves`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(move),
    });
    if (!resp.ok) {
      await parseError(resp);
    }
    return (await resp.json()) as SubmitResponse;
  }

  async getStats(sessionId: string): Promise<StatsRowJson[]> {
    const resp = await fetch(`${this.base}/sessions/${sessionId}/stats`);
    if (!resp.ok) {
      await parseError(resp);
    }
    return (await resp.json()).rows as StatsRowJson[];
  }
}

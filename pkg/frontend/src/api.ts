/** Typed client for the session service; every mutation carries the version token. */

import type {
  BootstrapPayload,
  CandidatesPayload,
  CreateSessionBody,
  ScreePayload,
  SessionSummary,
  StepBody,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.name = "ApiError";
  }

  /** The winning state carried by a 409 version conflict, when present. */
  conflictState(): SessionSummary | null {
    if (
      this.status === 409 &&
      this.detail &&
      typeof this.detail === "object" &&
      "state" in (this.detail as Record<string, unknown>)
    ) {
      return (this.detail as { state: SessionSummary }).state;
    }
    return null;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class SessionClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const text = await resp.text();
    let body: unknown = text;
    try {
      body = text ? JSON.parse(text) : null;
    } catch {
      /* plain-text payloads (DOT) stay as text */
    }
    if (!resp.ok) {
      const detail =
        body && typeof body === "object" && "detail" in (body as Record<string, unknown>)
          ? (body as { detail: unknown }).detail
          : body;
      throw new ApiError(resp.status, detail);
    }
    return body as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<{ status: string }> {
    return this.request("/healthz");
  }

  createSession(body: CreateSessionBody): Promise<SessionSummary> {
    return this.post("/sessions", body);
  }

  getSession(id: string): Promise<SessionSummary> {
    return this.request(`/sessions/${id}`);
  }

  getCandidates(id: string, topK = 20): Promise<CandidatesPayload> {
    return this.request(`/sessions/${id}/candidates?top_k=${topK}`);
  }

  step(id: string, body: StepBody): Promise<SessionSummary> {
    return this.post(`/sessions/${id}/step`, body);
  }

  undo(id: string, version?: number): Promise<SessionSummary> {
    return this.post(`/sessions/${id}/undo`, version === undefined ? {} : { version });
  }

  screeReport(id: string): Promise<{ scree: ScreePayload; version: number }> {
    return this.request(`/sessions/${id}/report/scree`);
  }

  logcontrastReport(id: string): Promise<{ logcontrast: import("./types.js").LogContrastEntry[] }> {
    return this.request(`/sessions/${id}/report/logcontrast`);
  }

  bootstrapReport(id: string, b = 400, seed?: number): Promise<BootstrapPayload> {
    const seedParam = seed === undefined ? "" : `&seed=${seed}`;
    return this.request(`/sessions/${id}/report/bootstrap?B=${b}${seedParam}`);
  }

  graphDot(id: string): Promise<string> {
    return this.request(`/sessions/${id}/report/graph`);
  }
}

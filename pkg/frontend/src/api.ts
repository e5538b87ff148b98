// Thin typed client over the study server's HTTP API.

import type {
  ComprehensionResult,
  PhasePayload,
  ResponseAck,
  SessionCreated,
} from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class StudyApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) =>
      fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body ?? {}),
    });
  }

  createSession(studyId: string): Promise<SessionCreated> {
    return this.post(`/studies/${studyId}/sessions`);
  }

  getPhase(sessionId: string): Promise<PhasePayload> {
    return this.request(`/sessions/${sessionId}/phase`);
  }

  advance(sessionId: string, survey?: unknown): Promise<{ phase: string }> {
    return this.post(
      `/sessions/${sessionId}/advance`,
      survey === undefined ? {} : { survey },
    );
  }

  submitComprehension(
    sessionId: string,
    answers: Record<string, string>,
  ): Promise<ComprehensionResult> {
    return this.post(`/sessions/${sessionId}/comprehension`, { answers });
  }

  submitResponse(
    sessionId: string,
    itemId: string,
    answer: 0 | 1,
    elapsedMs: number,
  ): Promise<ResponseAck> {
    return this.post(`/sessions/${sessionId}/responses`, {
      item_id: itemId,
      answer,
      elapsed_ms: Math.round(elapsedMs),
    });
  }
}

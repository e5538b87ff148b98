// Session flow controller: mirrors the server's phase machine, owns the
// single in-flight submission, and survives reloads by refetching the phase
// for the session token in the URL.

import { ApiError, StudyApi } from "./api";
import type { PhasePayload } from "./types";

export interface PendingAnswer {
  itemId: string;
  answer: 0 | 1;
  elapsedMs: number;
}

export type StateListener = (state: SessionController) => void;

export class SessionController {
  payload: PhasePayload | null = null;
  submitting = false;
  pending: PendingAnswer | null = null; // retained across network failures
  lastError: string | null = null;

  constructor(
    private readonly api: StudyApi,
    readonly sessionId: string,
    private readonly onChange: StateListener = () => {},
  ) {}

  get phase(): string {
    return this.payload?.phase ?? "loading";
  }

  async refresh(): Promise<void> {
    this.payload = await this.api.getPhase(this.sessionId);
    this.lastError = null;
    this.onChange(this);
  }

  async advance(survey?: unknown): Promise<void> {
    await this.api.advance(this.sessionId, survey);
    await this.refresh();
  }

  async submitComprehension(answers: Record<string, string>) {
    const result = await this.api.submitComprehension(this.sessionId, answers);
    await this.refresh();
    return result;
  }

  /** Submit the current item's decision; at most one request in flight.
   * Network failures keep the answer pending for a retry; a conflict means
   * the server is ahead of us, so the local view resyncs. */
  async submitAndAdvance(answer: 0 | 1, elapsedMs: number): Promise<boolean> {
    if (this.submitting) return false;
    const item = this.payload?.item;
    if (!item) throw new Error("no item is currently displayed");
    this.pending = { itemId: item.item_id, answer, elapsedMs };
    return this.flushPending();
  }

  /** Resend the retained answer after a network failure. */
  async flushPending(): Promise<boolean> {
    if (!this.pending || this.submitting) return false;
    this.submitting = true;
    this.onChange(this);
    const { itemId, answer, elapsedMs } = this.pending;
    try {
      await this.api.submitResponse(this.sessionId, itemId, answer, elapsedMs);
      this.pending = null;
      await this.refresh();
      return true;
    } catch (err) {
      if (err instanceof ApiError) {
        // the server already moved past this item (duplicate/out-of-order):
        // drop the stale answer and resync
        this.pending = null;
        this.lastError = err.detail;
        await this.refresh();
        return false;
      }
      // network failure: keep the answer for retry
      this.lastError = "network failure; your answer was kept for retry";
      this.onChange(this);
      return false;
    } finally {
      this.submitting = false;
      this.onChange(this);
    }
  }
}

export function sessionTokenFromUrl(href: string): string | null {
  const url = new URL(href);
  return url.searchParams.get("session");
}

export async function resumeOrCreate(
  api: StudyApi,
  studyId: string,
  href: string,
): Promise<SessionController> {
  const token = sessionTokenFromUrl(href);
  if (token) {
    const controller = new SessionController(api, token);
    await controller.refresh(); // stateless resume: server phase is authoritative
    return controller;
  }
  const created = await api.createSession(studyId);
  const controller = new SessionController(api, created.session_id);
  await controller.refresh();
  return controller;
}

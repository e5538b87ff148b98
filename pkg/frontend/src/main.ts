// Application entry point: wires the API client, session controller,
// renderers, and timers into the single-page study flow.

import { StudyApi } from "./api";
import { renderCase, renderError, renderStatic, renderTimers } from "./render";
import { resumeOrCreate, SessionController } from "./state";
import { CountdownPair, ElapsedTimer } from "./timers";
import type { ComprehensionQuestion, SurveyQuestion } from "./types";

const STUDY_ID =
  document.documentElement.dataset.studyId ?? "alien-diagnosis";
const BASE_URL = document.documentElement.dataset.apiBase ?? "";

export async function boot(root: HTMLElement): Promise<void> {
  const api = new StudyApi(BASE_URL);
  let controller: SessionController;
  try {
    controller = await resumeOrCreate(api, STUDY_ID, window.location.href);
  } catch (err) {
    renderError(root, `Could not join the study: ${String(err)}`);
    return;
  }
  // keep the session token in the URL so reloads resume where they left off
  const url = new URL(window.location.href);
  if (url.searchParams.get("session") !== controller.sessionId) {
    url.searchParams.set("session", controller.sessionId);
    window.history.replaceState(null, "", url.toString());
  }
  const view = new StudyView(root, controller);
  view.show();
}

class StudyView {
  private readonly caseBox: HTMLElement;
  private readonly timerBox: HTMLElement;
  private readonly statusBox: HTMLElement;
  private countdown: CountdownPair | null = null;
  private elapsed = new ElapsedTimer();
  private ticker: number | null = null;

  constructor(
    root: HTMLElement,
    private readonly controller: SessionController,
  ) {
    this.timerBox = document.createElement("div");
    this.timerBox.className = "timers";
    this.caseBox = document.createElement("div");
    this.caseBox.className = "case";
    this.statusBox = document.createElement("div");
    this.statusBox.className = "status";
    root.replaceChildren(this.timerBox, this.caseBox, this.statusBox);
  }

  show(): void {
    const payload = this.controller.payload;
    if (!payload) return;
    this.statusBox.textContent = this.controller.lastError ?? "";
    switch (payload.phase) {
      case "consent":
      case "instructions":
      case "done":
        this.stopTicker();
        renderStatic(this.caseBox, payload);
        this.caseBox
          .querySelector("button.advance-button")
          ?.addEventListener("click", () => this.advance());
        break;
      case "comprehension":
        this.stopTicker();
        this.renderComprehension(
          (payload.questions ?? []) as ComprehensionQuestion[],
        );
        break;
      case "training":
      case "test":
        this.renderItem();
        break;
      case "exit_survey":
        this.stopTicker();
        this.renderSurvey((payload.questions ?? []) as SurveyQuestion[]);
        break;
    }
  }

  private async advance(survey?: unknown): Promise<void> {
    await this.controller.advance(survey);
    this.show();
  }

  private renderComprehension(questions: ComprehensionQuestion[]): void {
    this.caseBox.replaceChildren();
    const form = document.createElement("form");
    const picks = new Map<string, string>();
    for (const q of questions) {
      const block = document.createElement("fieldset");
      const legend = document.createElement("legend");
      legend.textContent = q.text;
      block.appendChild(legend);
      if (q.advice) {
        const ul = document.createElement("ul");
        for (const a of q.advice) {
          const li = document.createElement("li");
          li.textContent = `${a.trait}: ${a.value}`;
          ul.appendChild(li);
        }
        block.appendChild(ul);
      }
      for (const option of q.options) {
        const label = document.createElement("label");
        const radio = document.createElement("input");
        radio.type = "radio";
        radio.name = q.id;
        radio.value = option;
        radio.addEventListener("change", () => picks.set(q.id, option));
        label.append(radio, option);
        block.appendChild(label);
      }
      form.appendChild(block);
    }
    const submit = document.createElement("button");
    submit.type = "submit";
    submit.textContent = "Check my understanding";
    form.appendChild(submit);
    form.addEventListener("submit", async (ev) => {
      ev.preventDefault();
      const result = await this.controller.submitComprehension(
        Object.fromEntries(picks),
      );
      if (!result.passed && !result.screened_out) {
        this.statusBox.textContent =
          "Not quite — review the instructions and try again.";
      }
      this.show();
    });
    this.caseBox.appendChild(form);
  }

  private renderItem(): void {
    const payload = this.controller.payload;
    const item = payload?.item;
    if (!payload || !item) return;
    if (payload.phase === "test" && payload.timer) {
      if (!this.countdown) {
        this.countdown = new CountdownPair(
          payload.timer.total_seconds,
          item.total,
          undefined,
          payload.timer.remaining_seconds,
        );
        this.startTicker();
      } else {
        this.countdown.nextQuestion();
      }
    }
    this.elapsed.restart();
    const buttons = renderCase(this.caseBox, item, {
      onDecision: async (answer) => {
        buttons.forEach((b) => (b.disabled = true));
        const ok = await this.controller.submitAndAdvance(
          answer,
          this.elapsed.elapsedMs(),
        );
        if (!ok && this.controller.pending) {
          // network failure: offer a retry that resends the kept answer
          renderError(this.statusBox, this.controller.lastError ?? "retry");
          this.statusBox
            .querySelector("button.retry-button")
            ?.addEventListener("click", async () => {
              await this.controller.flushPending();
              this.show();
            });
          buttons.forEach((b) => (b.disabled = false));
          return;
        }
        this.show();
      },
    });
  }

  private renderSurvey(questions: SurveyQuestion[]): void {
    this.caseBox.replaceChildren();
    const form = document.createElement("form");
    const answers: Record<string, string> = {};
    for (const q of questions) {
      const label = document.createElement("label");
      label.textContent = q.text;
      const input = document.createElement(
        q.kind === "text" ? "textarea" : "input",
      );
      input.addEventListener("change", () => {
        answers[q.id] = (input as HTMLInputElement).value;
      });
      label.appendChild(input);
      form.appendChild(label);
    }
    const submit = document.createElement("button");
    submit.type = "submit";
    submit.textContent = "Finish";
    form.appendChild(submit);
    form.addEventListener("submit", async (ev) => {
      ev.preventDefault();
      await this.advance(answers);
    });
    this.caseBox.appendChild(form);
  }

  private startTicker(): void {
    this.stopTicker();
    this.ticker = window.setInterval(() => {
      if (!this.countdown) return;
      const snap = this.countdown.snapshot();
      renderTimers(
        this.timerBox,
        snap.globalRemaining,
        snap.questionRemaining,
        snap.questionExpired,
      );
    }, 250);
  }

  private stopTicker(): void {
    if (this.ticker !== null) {
      window.clearInterval(this.ticker);
      this.ticker = null;
    }
    this.timerBox.replaceChildren();
    this.countdown = null;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot(document.getElementById("app")!);
}

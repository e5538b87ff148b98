// DOM rendering for the three-block case screen and the surrounding phases.
//
// Block 1: named trait measurements. Block 2: the researcher's advice with
// sign and magnitude made visually distinct. Block 3: the binary decision.
// Training mode adds a banner with the correct answer.

import type {
  AdviceEntry,
  PhasePayload,
  TestItemPayload,
  TrainingItemPayload,
  TimerPayload,
} from "./types";
import { isTrainingItem } from "./types";
import { formatClock } from "./timers";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function adviceRow(entry: AdviceEntry, maxMagnitude: number): HTMLElement {
  const row = el("div", "advice-row");
  row.appendChild(el("span", "advice-trait", entry.trait));
  if (entry.value === 0) {
    row.appendChild(el("span", "advice-value no-effect", "no effect"));
    return row;
  }
  const direction = entry.value > 0 ? "positive" : "negative";
  const value = el("span", `advice-value ${direction}`, entry.value.toString());
  row.appendChild(value);
  const bar = el("span", `advice-bar ${direction}`);
  const scale = maxMagnitude > 0 ? Math.abs(entry.value) / maxMagnitude : 0;
  bar.style.width = `${Math.round(100 * scale)}%`;
  row.appendChild(bar);
  return row;
}

export interface DecisionHandlers {
  onDecision: (answer: 0 | 1) => void;
}

/** Render one case into `container`; returns the decision buttons so the
 * caller can manage the submission lock. */
export function renderCase(
  container: HTMLElement,
  item: TrainingItemPayload | TestItemPayload,
  handlers: DecisionHandlers,
): HTMLButtonElement[] {
  container.replaceChildren();

  const progress = el(
    "div",
    "progress",
    `Case ${item.index + 1} of ${item.total}`,
  );
  container.appendChild(progress);

  if (isTrainingItem(item)) {
    const banner = el(
      "div",
      "answer-banner",
      `Correct answer: ${item.decision_labels[item.correct_answer]}`,
    );
    container.appendChild(banner);
  }

  const measurements = el("section", "measurements");
  measurements.appendChild(el("h2", undefined, "Measurements"));
  for (const m of item.measurements) {
    const row = el("div", "measurement-row");
    row.appendChild(el("span", "measurement-trait", m.trait));
    row.appendChild(el("span", "measurement-value", m.value.toString()));
    measurements.appendChild(row);
  }
  if (item.prediction !== undefined) {
    const row = el("div", "measurement-row prediction");
    row.appendChild(el("span", "measurement-trait", "recorded diagnosis"));
    row.appendChild(
      el("span", "measurement-value", item.decision_labels[item.prediction]),
    );
    measurements.appendChild(row);
  }
  container.appendChild(measurements);

  const advice = el("section", "advice");
  advice.appendChild(el("h2", undefined, "Researcher's advice"));
  const maxMagnitude = Math.max(...item.advice.map((a) => Math.abs(a.value)));
  for (const entry of item.advice) {
    advice.appendChild(adviceRow(entry, maxMagnitude));
  }
  container.appendChild(advice);

  const decision = el("section", "decision");
  decision.appendChild(el("h2", undefined, "Your decision"));
  const buttons: HTMLButtonElement[] = [];
  item.decision_labels.forEach((label, answer) => {
    const button = el("button", "decision-button", label);
    button.addEventListener("click", () =>
      handlers.onDecision(answer as 0 | 1),
    );
    decision.appendChild(button);
    buttons.push(button);
  });
  container.appendChild(decision);
  return buttons;
}

export function renderTimers(
  container: HTMLElement,
  globalRemaining: number,
  questionRemaining: number,
  questionExpired: boolean,
): void {
  container.replaceChildren();
  container.appendChild(
    el("span", "timer global", `Time left: ${formatClock(globalRemaining)}`),
  );
  const question = el(
    "span",
    questionExpired ? "timer question expired" : "timer question",
    `Suggested for this case: ${formatClock(questionRemaining)}`,
  );
  container.appendChild(question);
}

export function renderError(container: HTMLElement, message: string): void {
  container.replaceChildren();
  const box = el("div", "error-box", message);
  const retry = el("button", "retry-button", "Retry");
  box.appendChild(retry);
  container.appendChild(box);
}

export function renderStatic(
  container: HTMLElement,
  payload: PhasePayload,
): void {
  container.replaceChildren();
  if (payload.phase === "consent") {
    container.appendChild(el("p", "consent-text", payload.consent ?? ""));
    container.appendChild(el("button", "advance-button", "I agree"));
  } else if (payload.phase === "instructions") {
    container.appendChild(el("p", "scenario", payload.scenario ?? ""));
    container.appendChild(el("p", "instructions", payload.instructions ?? ""));
    container.appendChild(el("button", "advance-button", "Continue"));
  } else if (payload.phase === "done") {
    container.appendChild(
      el("p", "done", "All done — thank you for taking part."),
    );
  }
}

export function timerPayloadToText(timer: TimerPayload): string {
  return `${formatClock(timer.remaining_seconds)} (${timer.recommended_seconds}s per case)`;
}

// Advisory countdown timers for the timed test phase.
//
// Deadlines are soft: expiry only changes styling state and never blocks
// submission. The per-question recommendation is the total budget divided
// by the number of questions.

export type Clock = () => number; // milliseconds, monotonic preferred

export function recommendedSeconds(
  totalSeconds: number,
  nQuestions: number,
): number {
  if (totalSeconds <= 0 || nQuestions <= 0) {
    throw new Error("timer budget and question count must be positive");
  }
  return totalSeconds / nQuestions;
}

export interface TimerSnapshot {
  globalRemaining: number; // seconds, never negative
  questionRemaining: number; // seconds, never negative
  globalExpired: boolean;
  questionExpired: boolean;
}

export class CountdownPair {
  private readonly startedAt: number;
  private questionStartedAt: number;
  readonly perQuestion: number;

  constructor(
    private readonly totalSeconds: number,
    nQuestions: number,
    private readonly clock: Clock = () => performance.now(),
    globalRemainingSeconds?: number,
  ) {
    this.perQuestion = recommendedSeconds(totalSeconds, nQuestions);
    const now = this.clock();
    // when resuming, trust the server's remaining-time figure
    const consumed =
      globalRemainingSeconds === undefined
        ? 0
        : Math.max(0, totalSeconds - globalRemainingSeconds);
    this.startedAt = now - consumed * 1000;
    this.questionStartedAt = now;
  }

  nextQuestion(): void {
    this.questionStartedAt = this.clock();
  }

  snapshot(): TimerSnapshot {
    const now = this.clock();
    const globalElapsed = (now - this.startedAt) / 1000;
    const questionElapsed = (now - this.questionStartedAt) / 1000;
    const globalRemaining = Math.max(0, this.totalSeconds - globalElapsed);
    const questionRemaining = Math.max(0, this.perQuestion - questionElapsed);
    return {
      globalRemaining,
      questionRemaining,
      globalExpired: globalElapsed >= this.totalSeconds,
      questionExpired: questionElapsed >= this.perQuestion,
    };
  }
}

export class ElapsedTimer {
  private startedAt: number;

  constructor(private readonly clock: Clock = () => performance.now()) {
    this.startedAt = this.clock();
  }

  restart(): void {
    this.startedAt = this.clock();
  }

  elapsedMs(): number {
    // monotonic measurement clamped at zero
    return Math.max(0, this.clock() - this.startedAt);
  }
}

export function formatClock(seconds: number): string {
  const s = Math.max(0, Math.ceil(seconds));
  const minutes = Math.floor(s / 60);
  const rest = s % 60;
  return `${minutes}:${String(rest).padStart(2, "0")}`;
}

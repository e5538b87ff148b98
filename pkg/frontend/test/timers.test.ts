import { describe, expect, it } from "vitest";
import {
  CountdownPair,
  ElapsedTimer,
  formatClock,
  recommendedSeconds,
} from "../src/timers";

function fakeClock(start = 0) {
  let now = start;
  return {
    clock: () => now,
    tick: (ms: number) => {
      now += ms;
    },
  };
}

describe("recommendedSeconds", () => {
  it("divides the budget by the question count", () => {
    expect(recommendedSeconds(600, 30)).toBe(20);
  });

  it("rejects non-positive inputs", () => {
    expect(() => recommendedSeconds(0, 30)).toThrow();
    expect(() => recommendedSeconds(600, 0)).toThrow();
  });
});

describe("CountdownPair", () => {
  it("starts the per-question timer at total/n", () => {
    const { clock } = fakeClock();
    const pair = new CountdownPair(600, 30, clock);
    const snap = pair.snapshot();
    expect(snap.questionRemaining).toBe(20);
    expect(snap.globalRemaining).toBe(600);
  });

  it("counts down and flags soft expiry without going negative", () => {
    const { clock, tick } = fakeClock();
    const pair = new CountdownPair(600, 30, clock);
    tick(25_000);
    const snap = pair.snapshot();
    expect(snap.questionRemaining).toBe(0);
    expect(snap.questionExpired).toBe(true);
    expect(snap.globalExpired).toBe(false);
    expect(snap.globalRemaining).toBe(575);
  });

  it("resets the per-question timer on nextQuestion", () => {
    const { clock, tick } = fakeClock();
    const pair = new CountdownPair(600, 30, clock);
    tick(18_000);
    pair.nextQuestion();
    tick(2_000);
    const snap = pair.snapshot();
    expect(snap.questionRemaining).toBe(18);
    expect(snap.globalRemaining).toBe(580);
  });

  it("resumes from the server's remaining figure", () => {
    const { clock } = fakeClock(50_000);
    const pair = new CountdownPair(600, 30, clock, 90);
    expect(pair.snapshot().globalRemaining).toBe(90);
  });
});

describe("ElapsedTimer", () => {
  it("measures from render to submission", () => {
    const { clock, tick } = fakeClock();
    const timer = new ElapsedTimer(clock);
    tick(1234);
    expect(timer.elapsedMs()).toBe(1234);
  });

  it("never reports negative values", () => {
    let now = 1000;
    const timer = new ElapsedTimer(() => now);
    now = 400; // a misbehaving clock going backwards
    expect(timer.elapsedMs()).toBe(0);
  });

  it("restart rebases the measurement", () => {
    const { clock, tick } = fakeClock();
    const timer = new ElapsedTimer(clock);
    tick(500);
    timer.restart();
    tick(250);
    expect(timer.elapsedMs()).toBe(250);
  });
});

describe("formatClock", () => {
  it("renders minutes and zero-padded seconds", () => {
    expect(formatClock(75)).toBe("1:15");
    expect(formatClock(600)).toBe("10:00");
    expect(formatClock(0)).toBe("0:00");
    expect(formatClock(-3)).toBe("0:00");
  });
});

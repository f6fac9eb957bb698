import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ConsoleApp } from "../src/console.js";
import { describeState } from "../src/state.js";
import { FakeDaemon, mountConsole } from "./fake_daemon.js";

let daemon: FakeDaemon;
let root: HTMLElement;
let app: ConsoleApp;

function makeApp(): ConsoleApp {
  return new ConsoleApp(root, daemon.transport(), {
    tickMs: 100,
    reconnectMs: 200,
    now: () => daemon.now,
  });
}

beforeEach(() => {
  vi.useFakeTimers();
  daemon = new FakeDaemon();
  root = mountConsole();
  app = makeApp();
});

afterEach(() => {
  app.stop();
  vi.useRealTimers();
});

describe("console against a simulated daemon", () => {
  it("renders a cue countdown within 200 ms of CueIssued", async () => {
    await app.start();
    daemon.now = 50_000;
    daemon.issueCue(1, 53_000);
    // within the acceptance bound: one ticker period later at most
    daemon.now += 100;
    vi.advanceTimersByTime(100);
    const countdown = root.querySelector("#cue-1 [data-testid=countdown]");
    expect(countdown).not.toBeNull();
    expect(countdown!.textContent).toBe("2.9s");
  });

  it("updates the countdown at 10 Hz as time passes", async () => {
    await app.start();
    daemon.now = 10_000;
    daemon.issueCue(2, 13_000);
    const texts = new Set<string>();
    for (let i = 0; i < 10; i++) {
      daemon.now += 100;
      vi.advanceTimersByTime(100);
      texts.add(root.querySelector("#cue-2 [data-testid=countdown]")!.textContent!);
    }
    expect(texts.size).toBeGreaterThanOrEqual(5);
    expect(texts.has("2.0s")).toBe(true);
  });

  it("acknowledging posts the command and shows CueAcked in the log tail", async () => {
    await app.start();
    daemon.now = 20_000;
    daemon.issueCue(3, 23_000);
    vi.advanceTimersByTime(100);
    const button = root.querySelector("#cue-3 [data-testid=ack]") as HTMLButtonElement;
    button.click();
    await vi.runOnlyPendingTimersAsync();
    expect(daemon.commands).toContainEqual({ cmd: "ack_cue", id: 3 });
    const logKinds = [...root.querySelectorAll("#event-log li")].map(
      (li) => li.getAttribute("data-kind"),
    );
    expect(logKinds).toContain("CueAcked");
    const card = root.querySelector("#cue-3") as HTMLElement;
    expect(card.className).toContain("done");
    expect(card.querySelector("[data-testid=cue-state]")!.textContent).toContain("on time");
  });

  it("flags an unacknowledged cue past due + 1 s", async () => {
    await app.start();
    daemon.now = 30_000;
    daemon.issueCue(4, 31_000);
    daemon.now = 32_100; // 1.1 s past due
    vi.advanceTimersByTime(100);
    const card = root.querySelector("#cue-4") as HTMLElement;
    expect(card.className).toContain("late");
    expect(card.querySelector("[data-testid=cue-state]")!.textContent).toBe("LATE");
  });

  it("a refresh mid-session reconstructs identical state", async () => {
    await app.start();
    daemon.snapshot.phase = "Occupied";
    daemon.snapshot.presence = "Occupied";
    daemon.now = 40_000;
    daemon.emit("PresenceChanged", { presence: "Occupied" });
    daemon.emit("PhaseChanged", { phase: "Occupied" });
    daemon.emit("BeatFired", { offset_ms: 1000, loop_index: 0 });
    daemon.issueCue(5, 45_000);
    daemon.emit("BeatFired", { offset_ms: 2000, loop_index: 0 });
    vi.advanceTimersByTime(100);
    const before = describeState(app.state);
    app.stop();

    // page refresh: new DOM, new console, same daemon; start() pulls the
    // snapshot and replays the buffered ring on its own
    root = mountConsole();
    app = makeApp();
    await app.start();
    vi.advanceTimersByTime(100);
    expect(describeState(app.state)).toBe(before);
    expect(root.querySelector("#cue-5")).not.toBeNull();
    expect(daemon.subscriptionLog.at(-1)).toBe(1);
  });

  it("reconnects after a stream error and resumes from the last seq", async () => {
    await app.start();
    daemon.emit("BeatFired", { offset_ms: 1000, loop_index: 0 });
    daemon.emit("BeatFired", { offset_ms: 2000, loop_index: 0 });
    const lastSeq = app.state.lastSeq;
    daemon.dropAllStreams();
    expect(app.state.connection).toBe("reconnecting");
    await vi.advanceTimersByTimeAsync(250);
    expect(app.state.connection).toBe("live");
    expect(daemon.subscriptionLog.at(-1)).toBe(lastSeq + 1);
  });

  it("shows engine status fields, never raw biodata", async () => {
    daemon.snapshot = {
      phase: "Occupied",
      presence: "Occupied",
      prepared: true,
      woz_mode: true,
      t: 0,
      live_session: { id: "abc", duration_ms: 65_000, bpm_count: 64, stretch_count: 65 },
      replay: {
        source: "prev",
        elapsed_ms: 65_000,
        loop_index: 0,
        loop_period_ms: 600_000,
        beats_total: 599,
        swings_total: 2,
        beats_fired: 64,
        swings_fired: 1,
        next_offset_ms: 66_000,
      },
    };
    await app.start();
    const text = (root.querySelector("#status-panel") as HTMLElement).textContent!;
    expect(text).toContain("Occupied");
    expect(text).toContain("64 beats");
    expect(text).toContain("64/599 beats");
    expect(text).toContain("1/2 swings");
    // counts only: no bpm values, no stretch readings
    expect(text).not.toMatch(/\b(60\.0|330)\b/);
  });
});

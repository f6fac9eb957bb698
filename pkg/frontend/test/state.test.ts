import { describe, expect, it } from "vitest";

import {
  applyEvent,
  applySnapshot,
  cueCountdownMs,
  describeState,
  initialState,
  isLate,
  LOG_TAIL_LIMIT,
} from "../src/state.js";
import type { ApiEvent, Snapshot } from "../src/types.js";

function event(seq: number, kind: string, detail: Record<string, unknown> = {}): ApiEvent {
  return { seq, t: seq * 10, kind, detail };
}

const baseSnapshot: Snapshot = {
  phase: "Occupied",
  presence: "Occupied",
  prepared: false,
  woz_mode: true,
  t: 0,
};

describe("state reducer", () => {
  it("tracks cue lifecycle from events", () => {
    const state = initialState();
    applyEvent(state, event(1, "CueIssued", { cue: 7, due_at: 30000 }));
    expect(state.cues.get(7)).toMatchObject({ id: 7, acknowledged: false });
    applyEvent(state, event(2, "CueAcked", { cue: 7, late_by_ms: null }));
    expect(state.cues.get(7)).toMatchObject({ acknowledged: true, lateByMs: null });
    expect(state.lastSeq).toBe(2);
  });

  it("ignores replayed duplicates", () => {
    const state = initialState();
    applyEvent(state, event(5, "BeatFired", { offset_ms: 100 }));
    applyEvent(state, event(5, "BeatFired", { offset_ms: 100 }));
    expect(state.log.length).toBe(1);
  });

  it("caps the log tail", () => {
    const state = initialState();
    for (let i = 1; i <= LOG_TAIL_LIMIT + 50; i++) {
      applyEvent(state, event(i, "BeatFired", {}));
    }
    expect(state.log.length).toBe(LOG_TAIL_LIMIT);
    expect(state.log[0]!.seq).toBe(51);
  });

  it("seeds pending cues from the snapshot", () => {
    const state = initialState();
    applySnapshot(state, {
      ...baseSnapshot,
      woz_pending_cues: [{ id: 3, due_at: 9000, due_in_ms: 2500 }],
    });
    expect(state.cues.get(3)).toMatchObject({ id: 3, dueAt: 9000, acknowledged: false });
  });

  it("phase change to Idle clears cue list", () => {
    const state = initialState();
    applySnapshot(state, baseSnapshot);
    applyEvent(state, event(1, "CueIssued", { cue: 1, due_at: 100 }));
    applyEvent(state, event(2, "PhaseChanged", { phase: "Idle" }));
    expect(state.cues.size).toBe(0);
    expect(state.snapshot?.phase).toBe("Idle");
  });

  it("computes countdown and lateness", () => {
    const cue = { id: 1, dueAt: 10000, acknowledged: false, lateByMs: null };
    expect(cueCountdownMs(cue, 7000)).toBe(3000);
    expect(isLate(cue, 10500)).toBe(false); // inside tolerance
    expect(isLate(cue, 11001)).toBe(true);
    const acked = { ...cue, acknowledged: true, lateByMs: 1500 };
    expect(isLate(acked, 20000)).toBe(true);
    const ackedOnTime = { ...cue, acknowledged: true, lateByMs: null };
    expect(isLate(ackedOnTime, 20000)).toBe(false);
  });

  it("describeState is deterministic", () => {
    const a = initialState();
    const b = initialState();
    for (const s of [a, b]) {
      applySnapshot(s, baseSnapshot);
      applyEvent(s, event(1, "CueIssued", { cue: 1, due_at: 100 }));
    }
    expect(describeState(a)).toBe(describeState(b));
  });
});

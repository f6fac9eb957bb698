/**
 * Console state, derived solely from /status plus the /events stream.
 * No biodata computation happens here: the console tracks counts,
 * timings, and cue lifecycle only, so a page refresh can always rebuild
 * the exact same picture from a fresh snapshot and subscription.
 */

import type { ApiEvent, Snapshot } from "./types.js";

export const LOG_TAIL_LIMIT = 200;

export interface CueView {
  id: number;
  dueAt: number;
  acknowledged: boolean;
  lateByMs: number | null;
}

export type Connection = "connecting" | "live" | "reconnecting";

export interface ConsoleState {
  connection: Connection;
  snapshot: Snapshot | null;
  cues: Map<number, CueView>;
  log: ApiEvent[];
  lastSeq: number;
}

export function initialState(): ConsoleState {
  return {
    connection: "connecting",
    snapshot: null,
    cues: new Map(),
    log: [],
    lastSeq: 0,
  };
}

export function applySnapshot(state: ConsoleState, snap: Snapshot): void {
  state.snapshot = snap;
  for (const pending of snap.woz_pending_cues ?? []) {
    if (!state.cues.has(pending.id)) {
      state.cues.set(pending.id, {
        id: pending.id,
        dueAt: pending.due_at,
        acknowledged: false,
        lateByMs: null,
      });
    }
  }
}

export function applyEvent(state: ConsoleState, event: ApiEvent): void {
  if (event.seq > 0) {
    if (event.seq <= state.lastSeq) return; // replayed duplicate
    state.lastSeq = event.seq;
  }
  switch (event.kind) {
    case "CueIssued": {
      const id = event.detail["cue"] as number;
      state.cues.set(id, {
        id,
        dueAt: event.detail["due_at"] as number,
        acknowledged: false,
        lateByMs: null,
      });
      break;
    }
    case "CueAcked": {
      const id = event.detail["cue"] as number;
      const cue = state.cues.get(id);
      if (cue) {
        cue.acknowledged = true;
        cue.lateByMs = (event.detail["late_by_ms"] as number | null) ?? null;
      }
      break;
    }
    case "PhaseChanged": {
      if (state.snapshot) {
        state.snapshot.phase = event.detail["phase"] as Snapshot["phase"];
        if (state.snapshot.phase === "Idle") state.cues.clear();
      }
      break;
    }
    case "PresenceChanged": {
      if (state.snapshot) {
        state.snapshot.presence = event.detail["presence"] as Snapshot["presence"];
      }
      break;
    }
  }
  state.log.push(event);
  if (state.log.length > LOG_TAIL_LIMIT) {
    state.log.splice(0, state.log.length - LOG_TAIL_LIMIT);
  }
}

export function cueCountdownMs(cue: CueView, nowMs: number): number {
  return cue.dueAt - nowMs;
}

/** A pending cue is flagged once it sits unacknowledged past the tolerance. */
export function isLate(cue: CueView, nowMs: number, lateMs = 1000): boolean {
  if (cue.acknowledged) return cue.lateByMs !== null;
  return nowMs > cue.dueAt + lateMs;
}

/** Stable serialization used to compare a rebuilt session with the original. */
export function describeState(state: ConsoleState): string {
  return JSON.stringify({
    phase: state.snapshot?.phase ?? null,
    presence: state.snapshot?.presence ?? null,
    prepared: state.snapshot?.prepared ?? null,
    cues: [...state.cues.values()].sort((a, b) => a.id - b.id),
    logTail: state.log.slice(-20).map((e) => [e.seq, e.kind]),
    lastSeq: state.lastSeq,
  });
}

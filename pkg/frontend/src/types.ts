/** Documents served by the engine's HTTP surface. */

export interface ApiEvent {
  seq: number;
  t: number;
  kind: string;
  detail: Record<string, unknown>;
}

export interface LiveSession {
  id: string;
  duration_ms: number;
  bpm_count: number;
  stretch_count: number;
}

export interface ReplayProgress {
  source: string;
  elapsed_ms: number;
  loop_index: number;
  loop_period_ms: number;
  beats_total: number;
  swings_total: number;
  beats_fired: number;
  swings_fired: number;
  next_offset_ms: number | null;
}

export interface PendingCue {
  id: number;
  due_at: number;
  due_in_ms: number;
}

export interface Snapshot {
  phase: "Idle" | "Occupied" | "Preparing";
  presence: "Vacant" | "Occupied";
  prepared: boolean;
  woz_mode: boolean;
  t: number;
  live_session?: LiveSession;
  replay?: ReplayProgress;
  woz_pending_cues?: PendingCue[];
}

export type Command =
  | { cmd: "ack_cue"; id: number }
  | { cmd: "override_presence"; state: "Occupied" | "Vacant" | null }
  | { cmd: "load_seed_trace"; path: string }
  | { cmd: "shutdown" };

/**
 * The console controller: owns the state, the event subscription with
 * resume-on-reconnect, the countdown ticker, and acknowledgment posting.
 */

import type { DaemonTransport, EventStreamHandle } from "./api.js";
import {
  applyEvent,
  applySnapshot,
  ConsoleState,
  initialState,
} from "./state.js";
import type { ApiEvent } from "./types.js";
import { renderAll, renderCues } from "./view.js";

export interface ConsoleOptions {
  tickMs?: number;      // countdown refresh period (>= 5 Hz)
  reconnectMs?: number; // backoff before resubscribing
  now?: () => number;
}

export class ConsoleApp {
  readonly state: ConsoleState = initialState();
  private stream: EventStreamHandle | null = null;
  private ticker: ReturnType<typeof setInterval> | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private readonly tickMs: number;
  private readonly reconnectMs: number;
  private readonly now: () => number;
  private stopped = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly daemon: DaemonTransport,
    options: ConsoleOptions = {},
  ) {
    this.tickMs = options.tickMs ?? 100;
    this.reconnectMs = options.reconnectMs ?? 1000;
    this.now = options.now ?? (() => Date.now());
    this.root.addEventListener("click", (event) => {
      const target = event.target as HTMLElement;
      if (target.dataset?.testid === "ack") {
        const card = target.closest("[data-testid=cue]") as HTMLElement | null;
        if (card) void this.ackCue(Number(card.id.replace("cue-", "")));
      }
    });
  }

  async start(): Promise<void> {
    await this.refresh();
    // Always ask for buffered history: a fresh page rebuilds its log tail
    // from the ring (seq 1 onward; the daemon sends a GapNotice if the
    // ring has already rolled past).
    this.subscribe(this.state.lastSeq + 1);
    this.ticker = setInterval(() => renderCues(this.root, this.state, this.now()), this.tickMs);
  }

  stop(): void {
    this.stopped = true;
    this.stream?.close();
    if (this.ticker) clearInterval(this.ticker);
    if (this.reconnectTimer) clearTimeout(this.reconnectTimer);
  }

  /** Pull a fresh snapshot; the whole picture must be rebuildable from it. */
  async refresh(): Promise<void> {
    const snap = await this.daemon.fetchStatus();
    applySnapshot(this.state, snap);
    this.render();
  }

  async ackCue(id: number): Promise<void> {
    await this.daemon.postCommand({ cmd: "ack_cue", id });
    // server confirmation arrives as a CueAcked event
  }

  private subscribe(fromSeq: number | null): void {
    this.stream = this.daemon.openEvents(
      fromSeq,
      (event) => this.onEvent(event),
      () => this.onStreamError(),
    );
    this.state.connection = "live";
    this.render();
  }

  private onEvent(event: ApiEvent): void {
    applyEvent(this.state, event);
    this.render();
  }

  private onStreamError(): void {
    if (this.stopped) return;
    this.stream?.close();
    this.state.connection = "reconnecting";
    this.render();
    this.reconnectTimer = setTimeout(() => {
      if (this.stopped) return;
      void this.refresh().catch(() => undefined);
      this.subscribe(this.state.lastSeq + 1);
    }, this.reconnectMs);
  }

  private render(): void {
    renderAll(this.root, this.state, this.now());
  }
}

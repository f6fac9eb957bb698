/**
 * Transport between the console and the engine daemon.  Everything goes
 * through the documented HTTP surface: GET /status, GET /events (SSE),
 * POST /command.  The transport is injectable so tests can stand up a
 * simulated daemon without sockets.
 */

import type { ApiEvent, Command, Snapshot } from "./types.js";

export interface EventStreamHandle {
  close(): void;
}

export interface DaemonTransport {
  fetchStatus(): Promise<Snapshot>;
  postCommand(command: Command): Promise<Record<string, unknown>>;
  openEvents(
    fromSeq: number | null,
    onEvent: (event: ApiEvent) => void,
    onError: () => void,
  ): EventStreamHandle;
}

/** Browser transport talking to the daemon that served this page. */
export function httpTransport(base = ""): DaemonTransport {
  return {
    async fetchStatus(): Promise<Snapshot> {
      const response = await fetch(`${base}/status`);
      if (!response.ok) throw new Error(`status ${response.status}`);
      return (await response.json()) as Snapshot;
    },

    async postCommand(command: Command): Promise<Record<string, unknown>> {
      const response = await fetch(`${base}/command`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(command),
      });
      if (!response.ok) throw new Error(`command rejected: ${response.status}`);
      return (await response.json()) as Record<string, unknown>;
    },

    openEvents(fromSeq, onEvent, onError): EventStreamHandle {
      const url =
        fromSeq === null ? `${base}/events` : `${base}/events?from_seq=${fromSeq}`;
      const source = new EventSource(url);
      source.onmessage = (msg: MessageEvent) => {
        try {
          onEvent(JSON.parse(msg.data as string) as ApiEvent);
        } catch {
          // tolerate keepalives / partial lines
        }
      };
      source.onerror = () => onError();
      return { close: () => source.close() };
    },
  };
}

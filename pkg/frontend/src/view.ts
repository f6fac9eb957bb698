/**
 * DOM rendering.  Cue countdowns re-render on a 100 ms ticker (10 Hz);
 * everything else re-renders when state changes.  The console shows
 * counts and timings only — raw biodata never reaches the browser.
 */

import { ConsoleState, CueView, cueCountdownMs, isLate } from "./state.js";
import type { ApiEvent } from "./types.js";

export function renderAll(root: HTMLElement, state: ConsoleState, nowMs: number): void {
  renderConnection(root, state);
  renderStatus(root, state, nowMs);
  renderCues(root, state, nowMs);
  renderLog(root, state);
}

function el(root: HTMLElement, selector: string): HTMLElement {
  const found = root.querySelector(selector);
  if (!found) throw new Error(`missing element ${selector}`);
  return found as HTMLElement;
}

function renderConnection(root: HTMLElement, state: ConsoleState): void {
  const badge = el(root, "#connection");
  badge.textContent = state.connection;
  badge.className = `badge badge-${state.connection}`;
}

function renderStatus(root: HTMLElement, state: ConsoleState, nowMs: number): void {
  const panel = el(root, "#status-panel");
  const snap = state.snapshot;
  if (!snap) {
    panel.innerHTML = "<p>waiting for daemon…</p>";
    return;
  }
  const rows: string[] = [
    field("phase", snap.phase),
    field("presence", snap.presence),
    field("prepared trace", snap.prepared ? "ready" : "none"),
    field("mode", snap.woz_mode ? "wizard-of-oz" : "automatic"),
  ];
  if (snap.live_session) {
    rows.push(
      field(
        "recording",
        `${fmtMs(snap.live_session.duration_ms)} · ${snap.live_session.bpm_count} beats · ` +
          `${snap.live_session.stretch_count} stretch samples`,
      ),
    );
  }
  if (snap.replay) {
    const r = snap.replay;
    rows.push(
      field(
        "replay",
        `loop ${r.loop_index} · ${r.beats_fired}/${r.beats_total} beats · ` +
          `${r.swings_fired}/${r.swings_total} swings`,
      ),
    );
  }
  panel.innerHTML = `<dl>${rows.join("")}</dl>`;
}

function field(name: string, value: string): string {
  return `<div class="field"><dt>${name}</dt><dd>${value}</dd></div>`;
}

export function renderCues(root: HTMLElement, state: ConsoleState, nowMs: number): void {
  const container = el(root, "#cues");
  const cues = [...state.cues.values()].sort((a, b) => a.dueAt - b.dueAt);
  const wanted = new Set(cues.map((c) => `cue-${c.id}`));
  for (const child of [...container.children]) {
    if (!wanted.has(child.id)) child.remove();
  }
  for (const cue of cues) {
    let card = container.querySelector(`#cue-${cue.id}`) as HTMLElement | null;
    if (!card) {
      card = document.createElement("div");
      card.id = `cue-${cue.id}`;
      card.dataset.testid = "cue";
      card.innerHTML =
        `<span class="cue-name">swing #${cue.id}</span>` +
        `<span class="countdown" data-testid="countdown"></span>` +
        `<button type="button" data-testid="ack">pulled</button>` +
        `<span class="cue-state" data-testid="cue-state"></span>`;
      container.appendChild(card);
    }
    updateCueCard(card, cue, nowMs);
  }
}

function updateCueCard(card: HTMLElement, cue: CueView, nowMs: number): void {
  const countdown = card.querySelector("[data-testid=countdown]") as HTMLElement;
  const stateLabel = card.querySelector("[data-testid=cue-state]") as HTMLElement;
  const button = card.querySelector("[data-testid=ack]") as HTMLButtonElement;
  const late = isLate(cue, nowMs);
  card.className = cue.acknowledged ? "cue done" : late ? "cue late" : "cue pending";
  if (cue.acknowledged) {
    countdown.textContent = "";
    button.disabled = true;
    stateLabel.textContent =
      cue.lateByMs === null ? "✓ on time" : `✓ late by ${(cue.lateByMs / 1000).toFixed(1)}s`;
  } else {
    const remaining = cueCountdownMs(cue, nowMs);
    countdown.textContent =
      remaining >= 0 ? `${(remaining / 1000).toFixed(1)}s` : `${(-remaining / 1000).toFixed(1)}s ago`;
    button.disabled = false;
    stateLabel.textContent = late ? "LATE" : "";
  }
}

function renderLog(root: HTMLElement, state: ConsoleState): void {
  const list = el(root, "#event-log");
  const tail = state.log.slice(-12);
  list.innerHTML = tail
    .map((e) => `<li data-kind="${e.kind}">${fmtEvent(e)}</li>`)
    .join("");
}

function fmtEvent(event: ApiEvent): string {
  const detail = Object.entries(event.detail)
    .map(([k, v]) => `${k}=${String(v)}`)
    .join(" ");
  return `<span class="seq">#${event.seq}</span> <b>${event.kind}</b> ${detail}`;
}

function fmtMs(ms: number): string {
  const minutes = Math.floor(ms / 60000);
  const seconds = Math.floor((ms % 60000) / 1000);
  return `${String(minutes).padStart(2, "0")}:${String(seconds).padStart(2, "0")}`;
}

// Chat pane rendering: turn-ordered bubbles with act-type badges, plus an
// explain control on system acts.

import { actBadge } from "./colors.js";
import type { TranscriptEntry } from "./types.js";

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderEntry(e: TranscriptEntry, userName: string): string {
  const mine = e.speaker === userName;
  const side = mine ? "user" : "system";
  const explain = !mine && (e.act_type === "whq" || e.act_type === "ynq")
    ? `<button class="explain" data-turn="${e.turn}">why?</button>` : "";
  return (
    `<div class="bubble ${side}" data-turn="${e.turn}" data-act="${e.act_type}">` +
    `<span class="badge badge-${e.act_type}">${actBadge(e.act_type)}</span>` +
    `<span class="speaker">${esc(e.speaker)}</span>` +
    `<span class="text">${esc(e.text)}</span>${explain}</div>`
  );
}

export function renderTranscript(entries: TranscriptEntry[], userName: string): string {
  return [...entries].sort((a, b) => a.turn - b.turn)
    .map((e) => renderEntry(e, userName)).join("\n");
}

export function renderParseError(message: string): string {
  return `<div class="bubble error"><span class="text">${esc(message)}</span></div>`;
}

export const QUICK_REPLIES = ["yes", "no", "why do you ask"];

// Transcript rendering: one user bubble per utterance and one robot
// bubble per response. Refusals show the server's message verbatim in a
// red bubble; executed turns list their rendered actions.

import { ResponseKind, UtteranceResponseJson } from "./types.js";

export interface ChatTurn {
  turn: number;
  episode: number;
  utterance: string;
  kind: ResponseKind;
  message: string | null;
  program: string | null;
  renderedActions: string[];
  error: string | null;
}

export function turnFromResponse(
  utterance: string,
  episode: number,
  response: UtteranceResponseJson,
): ChatTurn {
  return {
    turn: response.turn,
    episode: episode,
    utterance: utterance,
    kind: response.response_kind,
    message: response.message,
    program: response.program,
    renderedActions: response.rendered_actions,
    error: response.error,
  };
}

export function renderTurnHtml(t: ChatTurn): string {
  const parts: string[] = [];
  parts.push(`<div class="bubble user" data-turn="${t.turn}">${escapeHtml(t.utterance)}</div>`);
  if (t.kind === "not_sure") {
    parts.push(`<div class="bubble robot not-sure">${escapeHtml(t.message ?? "")}</div>`);
  } else {
    const actions = t.renderedActions
      .map((a) => `<li>${escapeHtml(a)}</li>`)
      .join("");
    parts.push(
      `<div class="bubble robot">` +
        `<ol class="actions">${actions}</ol>` +
        (t.program === null ? "" : `<div class="program">${escapeHtml(t.program)}</div>`) +
        (t.error === null ? "" : `<div class="turn-error">${escapeHtml(t.error)}</div>`) +
        `</div>`,
    );
  }
  return parts.join("");
}

export function renderSystemHtml(text: string): string {
  return `<div class="system-line">${escapeHtml(text)}</div>`;
}

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

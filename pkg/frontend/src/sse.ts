// Server-sent events over fetch: an incremental text/event-stream parser
// plus a typed subscription to one session's event stream. The parser is
// pure so chunk-boundary handling is testable without a browser.

import { FetchLike } from "./api.js";
import { Phase, PhaseEventJson, RetrainingProgressJson, TurnEventJson } from "./types.js";

export interface SseMessage {
  event: string;
  data: string;
}

export class SseParser {
  private buffer = "";
  private eventName = "";
  private dataLines: string[] = [];

  // Consume one chunk of stream text; returns every message the chunk
  // completed. Partial lines and half-built events stay buffered.
  feed(chunk: string): SseMessage[] {
    this.buffer += chunk;
    const out: SseMessage[] = [];
    let index: number;
    while ((index = this.buffer.indexOf("\n")) >= 0) {
      let line = this.buffer.slice(0, index);
      this.buffer = this.buffer.slice(index + 1);
      if (line.endsWith("\r")) {
        line = line.slice(0, -1);
      }
      const message = this.consumeLine(line);
      if (message !== null) {
        out.push(message);
      }
    }
    return out;
  }

  private consumeLine(line: string): SseMessage | null {
    if (line === "") {
      return this.dispatch();
    }
    if (line.startsWith(":")) {
      return null; // comment / keep-alive
    }
    const colon = line.indexOf(":");
    const field = colon < 0 ? line : line.slice(0, colon);
    let value = colon < 0 ? "" : line.slice(colon + 1);
    if (value.startsWith(" ")) {
      value = value.slice(1);
    }
    if (field === "event") {
      this.eventName = value;
    } else if (field === "data") {
      this.dataLines.push(value);
    }
    // id / retry are not used by this service; other fields are ignored.
    return null;
  }

  private dispatch(): SseMessage | null {
    if (this.dataLines.length === 0) {
      this.eventName = "";
      return null;
    }
    const message: SseMessage = {
      event: this.eventName || "message",
      data: this.dataLines.join("\n"),
    };
    this.eventName = "";
    this.dataLines = [];
    return message;
  }
}

export interface EventHandlers {
  onPhase?: (data: PhaseEventJson) => void;
  onTurn?: (data: TurnEventJson) => void;
  onRetrainingProgress?: (data: RetrainingProgressJson) => void;
  onStreamDown?: (err: Error) => void;
  onStreamUp?: () => void;
}

const RECONNECT_DELAY_MS = 1000;
const DONE: Phase = "done";

export class EventStreamClient {
  private url: string;
  private handlers: EventHandlers;
  private fetchFn: FetchLike;
  private controller: AbortController | null = null;
  private stopped = false;

  constructor(url: string, handlers: EventHandlers, fetchFn?: FetchLike) {
    this.url = url;
    this.handlers = handlers;
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  // Read the stream until the session reports phase "done" or stop() is
  // called, reconnecting after transient drops.
  async start(): Promise<void> {
    while (!this.stopped) {
      try {
        await this.readOnce();
        if (!this.stopped) {
          this.handlers.onStreamDown?.(new Error("event stream ended early"));
        }
      } catch (err) {
        if (this.stopped) {
          break;
        }
        this.handlers.onStreamDown?.(err instanceof Error ? err : new Error(String(err)));
      }
      if (!this.stopped) {
        await sleep(RECONNECT_DELAY_MS);
      }
    }
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  private async readOnce(): Promise<void> {
    const controller = new AbortController();
    this.controller = controller;
    const response = await this.fetchFn(this.url, {
      headers: { accept: "text/event-stream" },
      signal: controller.signal,
    });
    if (!response.ok || response.body === null) {
      throw new Error(`event stream returned status ${response.status}`);
    }
    this.handlers.onStreamUp?.();
    const reader = response.body.getReader();
    const decoder = new TextDecoder("utf-8");
    const parser = new SseParser();
    for (;;) {
      const { done, value } = await reader.read();
      if (done) {
        return;
      }
      for (const message of parser.feed(decoder.decode(value, { stream: true }))) {
        this.dispatch(message);
        if (this.stopped) {
          controller.abort();
          return;
        }
      }
    }
  }

  private dispatch(message: SseMessage): void {
    let payload: unknown;
    try {
      payload = JSON.parse(message.data);
    } catch {
      return; // not one of ours
    }
    if (message.event === "phase") {
      const data = payload as PhaseEventJson;
      this.handlers.onPhase?.(data);
      if (data.phase === DONE) {
        this.stopped = true;
      }
    } else if (message.event === "turn") {
      this.handlers.onTurn?.(payload as TurnEventJson);
    } else if (message.event === "retraining_progress") {
      this.handlers.onRetrainingProgress?.(payload as RetrainingProgressJson);
    }
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

import { describe, expect, it } from "vitest";

import { EventStreamClient, SseParser } from "../src/sse";
import { PhaseEventJson, RetrainingProgressJson, TurnEventJson } from "../src/types";

describe("SseParser", () => {
  it("parses a complete named event", () => {
    const parser = new SseParser();
    const messages = parser.feed('event: phase\ndata: {"phase":"teaching","episode_index":1}\n\n');
    expect(messages).toEqual([
      { event: "phase", data: '{"phase":"teaching","episode_index":1}' },
    ]);
  });

  it("reassembles events split at arbitrary chunk boundaries", () => {
    const raw = 'event: turn\ndata: {"turn":0,"utterance":"hi","response_kind":"not_sure"}\n\n';
    for (let cut = 1; cut < raw.length - 1; cut++) {
      const parser = new SseParser();
      const first = parser.feed(raw.slice(0, cut));
      const second = parser.feed(raw.slice(cut));
      const messages = [...first, ...second];
      expect(messages).toHaveLength(1);
      expect(messages[0].event).toBe("turn");
      expect(JSON.parse(messages[0].data).utterance).toBe("hi");
    }
  });

  it("handles several events and keep-alive comments in one chunk", () => {
    const parser = new SseParser();
    const messages = parser.feed(
      ': keep-alive\n\nevent: a\ndata: 1\n\n: keep-alive\n\nevent: b\ndata: 2\n\n',
    );
    expect(messages.map((m) => m.event)).toEqual(["a", "b"]);
    expect(messages.map((m) => m.data)).toEqual(["1", "2"]);
  });

  it("accepts CRLF line endings", () => {
    const parser = new SseParser();
    const messages = parser.feed("event: a\r\ndata: 1\r\n\r\n");
    expect(messages).toEqual([{ event: "a", data: "1" }]);
  });

  it("joins multiple data lines with newlines", () => {
    const parser = new SseParser();
    const messages = parser.feed("data: one\ndata: two\n\n");
    expect(messages).toEqual([{ event: "message", data: "one\ntwo" }]);
  });

  it("emits nothing for a blank line without data", () => {
    const parser = new SseParser();
    expect(parser.feed("event: ghost\n\n")).toEqual([]);
  });
});

function streamOf(chunks: string[]): ReadableStream<Uint8Array> {
  const encoder = new TextEncoder();
  return new ReadableStream({
    start(controller) {
      for (const chunk of chunks) {
        controller.enqueue(encoder.encode(chunk));
      }
      controller.close();
    },
  });
}

function sse(event: string, data: unknown): string {
  return `event: ${event}\ndata: ${JSON.stringify(data)}\n\n`;
}

describe("EventStreamClient", () => {
  it("dispatches typed events and stops at phase done", async () => {
    const chunks = [
      sse("phase", { phase: "interaction", episode_index: 1 }),
      ": keep-alive\n\n",
      sse("turn", { turn: 0, utterance: "hello", response_kind: "not_sure" }),
      sse("retraining_progress", { stage: "training classifier" }),
      sse("retraining_progress", { stage: "done", version: 2, examples: 45 }),
      sse("phase", { phase: "done", episode_index: 2 }),
    ];
    let fetchCalls = 0;
    const phases: PhaseEventJson[] = [];
    const turns: TurnEventJson[] = [];
    const progress: RetrainingProgressJson[] = [];
    const client = new EventStreamClient(
      "/sessions/s1/events",
      {
        onPhase: (d) => phases.push(d),
        onTurn: (d) => turns.push(d),
        onRetrainingProgress: (d) => progress.push(d),
      },
      async () => {
        fetchCalls += 1;
        return new Response(streamOf(chunks), { status: 200 });
      },
    );
    await client.start();
    expect(fetchCalls).toBe(1); // no reconnect after a clean "done"
    expect(phases.map((p) => p.phase)).toEqual(["interaction", "done"]);
    expect(turns).toEqual([{ turn: 0, utterance: "hello", response_kind: "not_sure" }]);
    expect(progress.map((p) => p.stage)).toEqual(["training classifier", "done"]);
    expect(progress[1].version).toBe(2);
    expect(progress[1].examples).toBe(45);
  });

  it("reports a failed connection and can be stopped from the handler", async () => {
    const drops: Error[] = [];
    const client = new EventStreamClient(
      "/sessions/s1/events",
      {
        onStreamDown: (err) => {
          drops.push(err);
          client.stop();
        },
      },
      async () => new Response("gone", { status: 404 }),
    );
    await client.start();
    expect(drops).toHaveLength(1);
    expect(drops[0].message).toContain("404");
  });

  it("treats an early end of stream as a drop", async () => {
    const drops: Error[] = [];
    const client = new EventStreamClient(
      "/sessions/s1/events",
      {
        onStreamDown: (err) => {
          drops.push(err);
          client.stop();
        },
      },
      async () => new Response(streamOf([sse("phase", { phase: "interaction", episode_index: 1 })]), {
        status: 200,
      }),
    );
    await client.start();
    expect(drops).toHaveLength(1);
    expect(drops[0].message).toContain("ended early");
  });
});

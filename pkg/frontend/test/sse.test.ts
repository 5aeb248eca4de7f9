import { describe, expect, it } from "vitest";

import { SseParser, eventStreamPath } from "../src/sse.js";

describe("SSE parser", () => {
  it("parses complete blocks", () => {
    const parser = new SseParser();
    const events = parser.feed(
      'id: 1\nevent: ROUND_STARTED\ndata: {"t":0}\n\nid: 2\nevent: DECISION_RECEIVED\ndata: {"count":1}\n\n',
    );
    expect(events.map((e) => e.event)).toEqual(["ROUND_STARTED", "DECISION_RECEIVED"]);
    expect(events[0].id).toBe(1);
    expect(JSON.parse(events[1].data)).toEqual({ count: 1 });
  });

  it("handles chunks split mid-event", () => {
    const parser = new SseParser();
    expect(parser.feed("id: 7\nevent: ROUND_CO")).toEqual([]);
    const events = parser.feed('MPLETE\ndata: {"t":2}\n\n');
    expect(events).toHaveLength(1);
    expect(events[0]).toEqual({ id: 7, event: "ROUND_COMPLETE", data: '{"t":2}' });
  });

  it("ignores keep-alive comments", () => {
    const parser = new SseParser();
    expect(parser.feed(": keep-alive\n\n")).toEqual([]);
  });

  it("tracks the last event id for resumption", () => {
    const parser = new SseParser();
    parser.feed('id: 1\nevent: A\ndata: {}\n\nid: 5\nevent: B\ndata: {}\n\n');
    expect(parser.lastEventId).toBe(5);
    expect(eventStreamPath("g0001", parser.lastEventId)).toBe(
      "/games/g0001/events?lastEventId=5",
    );
    expect(eventStreamPath("g0001", null)).toBe("/games/g0001/events");
  });
});

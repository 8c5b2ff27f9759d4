import { describe, expect, it } from "vitest";

import { connectStream, type EventSourceLike } from "../src/sse.js";
import type { StreamEvent } from "../src/types.js";

class FakeSource implements EventSourceLike {
  listeners = new Map<string, (ev: { data: string }) => void>();
  onerror: ((ev: unknown) => void) | null = null;
  onopen: ((ev: unknown) => void) | null = null;
  closed = false;

  addEventListener(type: string, listener: (ev: { data: string }) => void): void {
    this.listeners.set(type, listener);
  }

  close(): void {
    this.closed = true;
  }

  emit(kind: string, data: unknown): void {
    this.listeners.get(kind)?.({ data: JSON.stringify(data) });
  }
}

function harness() {
  const sources: FakeSource[] = [];
  const scheduled: { fn: () => void; ms: number }[] = [];
  const events: StreamEvent[] = [];
  const states: string[] = [];
  const handle = connectStream(
    "/runs/x/stream",
    {
      onEvent: (ev) => events.push(ev),
      onStateChange: (s) => states.push(s),
    },
    () => {
      const src = new FakeSource();
      sources.push(src);
      return src;
    },
    { baseDelayMs: 100, maxDelayMs: 1000, schedule: (fn, ms) => scheduled.push({ fn, ms }) },
  );
  return { sources, scheduled, events, states, handle };
}

describe("sse client", () => {
  it("delivers typed events", () => {
    const h = harness();
    const src = h.sources[0];
    src.onopen?.({});
    src.emit("hello", { run_id: "x" });
    src.emit("frame", { tick: 1 });
    expect(h.events.map((e) => e.kind)).toEqual(["hello", "frame"]);
    expect(h.states).toEqual(["connecting", "live"]);
  });

  it("reconnects with exponential backoff after errors", () => {
    const h = harness();
    h.sources[0].onerror?.({});
    expect(h.sources[0].closed).toBe(true);
    expect(h.scheduled[0].ms).toBe(100);
    h.scheduled[0].fn(); // first retry connects a new source
    expect(h.sources.length).toBe(2);
    h.sources[1].onerror?.({});
    expect(h.scheduled[1].ms).toBe(200); // doubled
    h.scheduled[1].fn();
    h.sources[2].onopen?.({});
    expect(h.states).toContain("reconnecting");
    expect(h.states[h.states.length - 1]).toBe("live");
  });

  it("backoff delay is capped", () => {
    const h = harness();
    for (let i = 0; i < 8; i++) {
      h.sources[h.sources.length - 1].onerror?.({});
      h.scheduled[h.scheduled.length - 1].fn();
    }
    const delays = h.scheduled.map((s) => s.ms);
    expect(Math.max(...delays)).toBe(1000);
  });

  it("does not reconnect after the final metrics event", () => {
    const h = harness();
    const src = h.sources[0];
    src.onopen?.({});
    src.emit("metrics_final", { ds: 1 });
    src.onerror?.({}); // server closing the stream afterwards is expected
    expect(h.scheduled.length).toBe(0);
  });

  it("close() stops everything", () => {
    const h = harness();
    h.handle.close();
    expect(h.sources[0].closed).toBe(true);
    h.sources[0].onerror?.({});
    expect(h.scheduled.length).toBe(0);
    expect(h.states[h.states.length - 1]).toBe("closed");
  });
});

// Server-sent-events client with automatic backoff reconnect.
//
// The EventSource constructor is injected so tests can drive a fake.

import type { StreamEvent } from "./types.js";

export interface EventSourceLike {
  // deliberately loose so the DOM EventSource satisfies it structurally
  addEventListener(type: string, listener: (ev: { data: string }) => void): void;
  close(): void;
  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  onerror: ((ev: any) => void) | null;
  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  onopen: ((ev: any) => void) | null;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export interface StreamHandle {
  close(): void;
}

export interface StreamCallbacks {
  onEvent(ev: StreamEvent): void;
  onStateChange(state: "connecting" | "live" | "reconnecting" | "closed"): void;
}

const EVENT_KINDS = ["hello", "frame", "reasoning", "plan", "guidance", "metrics_final"] as const;

export function connectStream(
  url: string,
  callbacks: StreamCallbacks,
  factory: EventSourceFactory,
  opts: { baseDelayMs?: number; maxDelayMs?: number; schedule?: (fn: () => void, ms: number) => void } = {},
): StreamHandle {
  const baseDelay = opts.baseDelayMs ?? 500;
  const maxDelay = opts.maxDelayMs ?? 8000;
  const schedule = opts.schedule ?? ((fn, ms) => setTimeout(fn, ms));

  let source: EventSourceLike | null = null;
  let closed = false;
  let ended = false;
  let attempt = 0;

  const open = () => {
    if (closed || ended) return;
    callbacks.onStateChange(attempt === 0 ? "connecting" : "reconnecting");
    source = factory(url);
    source.onopen = () => {
      attempt = 0;
      callbacks.onStateChange("live");
    };
    for (const kind of EVENT_KINDS) {
      source.addEventListener(kind, (msg) => {
        let data: unknown;
        try {
          data = JSON.parse(msg.data);
        } catch {
          return;
        }
        if (kind === "metrics_final") ended = true;
        callbacks.onEvent({ kind, data } as StreamEvent);
      });
    }
    source.onerror = () => {
      if (closed || ended) return;
      source?.close();
      attempt += 1;
      const delay = Math.min(maxDelay, baseDelay * 2 ** (attempt - 1));
      callbacks.onStateChange("reconnecting");
      schedule(open, delay);
    };
  };

  open();
  return {
    close() {
      closed = true;
      source?.close();
      callbacks.onStateChange("closed");
    },
  };
}

/** Server-sent events over fetch, with reconnect and backoff.
 *
 * EventSource auto-reconnects even after the server is finished with a
 * stream, which turns a completed session into a polling loop. Reading
 * the stream through fetch instead lets the subscriber decide whether an
 * ended stream is final (session done) or a drop worth retrying.
 */

import type { FetchLike } from "./api.js";

export interface SseMessage {
  event: string;
  data: string;
}

/** Incremental parser for a text/event-stream byte stream. */
export class SseParser {
  private buffer = "";
  private eventType = "";
  private dataLines: string[] = [];

  /** Feed a chunk; returns every message completed by it. */
  push(chunk: string): SseMessage[] {
    this.buffer += chunk;
    const messages: SseMessage[] = [];
    for (;;) {
      const newline = this.buffer.indexOf("\n");
      if (newline < 0) break;
      let line = this.buffer.slice(0, newline);
      this.buffer = this.buffer.slice(newline + 1);
      if (line.endsWith("\r")) line = line.slice(0, -1);
      const message = this.line(line);
      if (message) messages.push(message);
    }
    return messages;
  }

  private line(line: string): SseMessage | null {
    if (line === "") {
      if (this.dataLines.length === 0 && this.eventType === "") return null;
      const message = { event: this.eventType || "message", data: this.dataLines.join("\n") };
      this.eventType = "";
      this.dataLines = [];
      return message;
    }
    if (line.startsWith(":")) return null; // comment / keep-alive
    const colon = line.indexOf(":");
    const field = colon < 0 ? line : line.slice(0, colon);
    let value = colon < 0 ? "" : line.slice(colon + 1);
    if (value.startsWith(" ")) value = value.slice(1);
    if (field === "event") this.eventType = value;
    else if (field === "data") this.dataLines.push(value);
    return null; // id and retry fields are not used here
  }
}

export interface SubscribeHandlers {
  onMessage(message: SseMessage): void;
  /** Called before each reconnect attempt; a chance to re-sync state. */
  onRetry?(attempt: number, delayMs: number): void;
  /** "ended": the server finished the stream and the subscriber said it
   * was final. "closed": close() was called. */
  onClose?(reason: "ended" | "closed"): void;
  /** Return true when an ended stream should NOT be retried. */
  isFinished?(): boolean;
}

export interface SubscribeOptions {
  fetchFn?: FetchLike;
  /** Backoff schedule in ms; the last entry repeats. */
  retryDelays?: number[];
}

export interface StreamHandle {
  close(): void;
}

const DEFAULT_RETRY_DELAYS = [500, 1000, 2000, 5000];

export function subscribe(
  url: string,
  handlers: SubscribeHandlers,
  options: SubscribeOptions = {},
): StreamHandle {
  const doFetch: FetchLike = options.fetchFn ?? ((u, init) => fetch(u, init));
  const delays = options.retryDelays ?? DEFAULT_RETRY_DELAYS;
  const controller = new AbortController();
  let closed = false;
  let attempt = 0;

  async function readOnce(): Promise<void> {
    const reply = await doFetch(url, {
      headers: { accept: "text/event-stream" },
      signal: controller.signal,
    });
    if (!reply.ok || !reply.body) throw new Error(`stream failed with status ${reply.status}`);
    attempt = 0; // connected; future drops start the schedule over
    const reader = reply.body.getReader();
    const decoder = new TextDecoder();
    const parser = new SseParser();
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      for (const message of parser.push(decoder.decode(value, { stream: true }))) {
        if (closed) return;
        handlers.onMessage(message);
      }
    }
  }

  async function run(): Promise<void> {
    for (;;) {
      try {
        await readOnce();
        if (closed) return;
        if (handlers.isFinished?.()) {
          handlers.onClose?.("ended");
          return;
        }
      } catch {
        if (closed) return;
      }
      const delay = delays[Math.min(attempt, delays.length - 1)];
      attempt += 1;
      handlers.onRetry?.(attempt, delay);
      await new Promise((resolve) => setTimeout(resolve, delay));
      if (closed) return;
    }
  }

  void run();

  return {
    close() {
      if (closed) return;
      closed = true;
      controller.abort();
      handlers.onClose?.("closed");
    },
  };
}

/** Shared scaffolding for the UI tests: a detached DOM window, an API stub,
 * a capturing stream subscription, and payload builders. */

import { Window } from "happy-dom";

import type { Api, Metrics } from "../src/api.js";
import type { AppContext } from "../src/context.js";
import type { SubscribeFn } from "../src/context.js";
import type { StreamHandle, SubscribeHandlers, SubscribeOptions } from "../src/sse.js";
import { Registry } from "../src/state.js";

export interface Dom {
  win: Window;
  doc: Document;
  root: HTMLElement;
}

const openWindows: Window[] = [];

export function makeDom(url = "http://127.0.0.1/ui/"): Dom {
  const win = new Window({ url });
  openWindows.push(win);
  const doc = win.document as unknown as Document;
  const root = doc.createElement("div");
  doc.body.append(root);
  return { win, doc, root };
}

export async function closeDoms(): Promise<void> {
  while (openWindows.length) {
    const win = openWindows.pop();
    try {
      await win?.happyDOM.close();
    } catch {
      // already closed
    }
  }
}

/** Let pending promise chains and zero-delay timers settle. */
export async function flush(rounds = 4): Promise<void> {
  for (let i = 0; i < rounds; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

export function q<T extends Element = HTMLElement>(root: ParentNode, selector: string): T {
  const node = root.querySelector(selector);
  if (!node) throw new Error(`no element matches ${selector}`);
  return node as T;
}

export function qa(root: ParentNode, selector: string): Element[] {
  return [...root.querySelectorAll(selector)];
}

export function text(root: ParentNode, selector: string): string {
  return q(root, selector).textContent ?? "";
}

/** Dispatch a simple event built from the element's own window. */
export function fire(win: Window, target: Element, type: string): void {
  target.dispatchEvent(new win.Event(type, { bubbles: true }) as unknown as Event);
}

export function stubApi(overrides: Partial<Api> = {}): Api {
  const unstubbed = (name: string) => () => Promise.reject(new Error(`${name} is not stubbed`));
  return {
    createSession: unstubbed("createSession"),
    getSession: unstubbed("getSession"),
    submitAnswers: unstubbed("submitAnswers"),
    createSuite: unstubbed("createSuite"),
    createRun: unstubbed("createRun"),
    getReports: unstubbed("getReports"),
    getMetrics: unstubbed("getMetrics"),
    eventsUrl: (sessionId: string) => `/sessions/${sessionId}/events`,
    ...overrides,
  };
}

export interface CapturedStream {
  url: string | null;
  handlers: SubscribeHandlers | null;
  closed: boolean;
}

export function captureSubscribe(): { captured: CapturedStream; subscribe: SubscribeFn } {
  const captured: CapturedStream = { url: null, handlers: null, closed: false };
  const subscribe: SubscribeFn = (
    url: string,
    handlers: SubscribeHandlers,
    _options?: SubscribeOptions,
  ): StreamHandle => {
    captured.url = url;
    captured.handlers = handlers;
    return {
      close: () => {
        captured.closed = true;
      },
    };
  };
  return { captured, subscribe };
}

export interface TestContext extends AppContext {
  navigations: string[];
}

export function makeContext(api: Api, subscribe?: SubscribeFn): TestContext {
  const navigations: string[] = [];
  return {
    api,
    subscribe: subscribe ?? (() => ({ close() {} })),
    registry: new Registry(),
    navigate(hash: string) {
      navigations.push(hash);
    },
    navigations,
  };
}

export function zeroMetrics(overrides: Partial<Metrics> = {}): Metrics {
  return {
    scenarios_generated: 0,
    scenarios_executed: 0,
    passed: 0,
    errors_detected: 0,
    indeterminate: 0,
    error_types: [],
    error_type_count: 0,
    clar_time: 0,
    clar_tokens: 0,
    clar_interactions: 0,
    test_time: 0,
    test_tokens: 0,
    test_interactions: 0,
    ...overrides,
  };
}

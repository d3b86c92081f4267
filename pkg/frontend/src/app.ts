/** Hash router and app shell. */

import { createApi } from "./api.js";
import type { Api } from "./api.js";
import type { AppContext, View } from "./context.js";
import { clear, el } from "./dom.js";
import { subscribe } from "./sse.js";
import { Registry } from "./state.js";
import { renderHome } from "./views/home.js";
import { renderRun } from "./views/run.js";
import { renderSession } from "./views/session.js";

/** The slice of Window the app needs; a test harness window works too. */
export interface AppWindow {
  document: Document;
  location: { hash: string };
  addEventListener(type: string, listener: () => void): void;
  removeEventListener(type: string, listener: () => void): void;
}

export interface AppOptions {
  api?: Api;
}

export interface App {
  navigate(hash: string): void;
  dispose(): void;
}

export function startApp(win: AppWindow, options: AppOptions = {}): App {
  const doc = win.document;
  const root = doc.getElementById("app");
  if (!root) throw new Error("no #app element to mount on");

  const ctx: AppContext = {
    api: options.api ?? createApi(),
    subscribe,
    registry: new Registry(),
    navigate(hash: string) {
      win.location.hash = hash;
      route(); // don't wait on the hashchange event; route() dedupes
    },
  };

  clear(root);
  const header = el(doc, "header", { class: "app-header" },
    el(doc, "h1", {}, el(doc, "a", { href: "#/" }, "webmac")),
    el(doc, "p", { class: "tagline" }, "scenario clarification, suite generation, run reports"));
  const outlet = el(doc, "main", { class: "outlet" });
  root.append(header, outlet);

  let current: View = {};
  let routedHash: string | null = null;

  function route(): void {
    const hash = win.location.hash || "#/";
    if (hash === routedHash) return;
    routedHash = hash;
    current.dispose?.();
    const session = hash.match(/^#\/sessions\/([^/]+)$/);
    const run = hash.match(/^#\/runs\/([^/]+)$/);
    if (session) current = renderSession(outlet, ctx, decodeURIComponent(session[1]));
    else if (run) current = renderRun(outlet, ctx, decodeURIComponent(run[1]));
    else current = renderHome(outlet, ctx);
  }

  win.addEventListener("hashchange", route);
  route();

  return {
    navigate: ctx.navigate,
    dispose() {
      current.dispose?.();
      win.removeEventListener("hashchange", route);
    },
  };
}

/** Landing view: edit or load a scenario, start a clarification session,
 * or open a persisted run by id. */

import { ApiError } from "../api.js";
import type { AppContext, View } from "../context.js";
import { clear, el } from "../dom.js";

export const EXAMPLE_SCENARIO = [
  "Feature: Add Owner",
  "Given this is the current URL: http://127.0.0.1:8080/owners/new",
  "When I add a person with first name 'Tom' and last name 'Griffin' as a new pet owner",
  "Then the owner should be created",
].join("\n");

export function renderHome(root: HTMLElement, ctx: AppContext): View {
  const doc = root.ownerDocument;
  clear(root);

  const scenarioInput = el(doc, "textarea", {
    class: "scenario-input",
    rows: "6",
    placeholder: "Feature: ...\nGiven this is the current URL: http://...\nWhen ...\nThen ...",
  });
  const roundsInput = el(doc, "input", { class: "rounds-input", type: "number", value: "3", min: "0" });
  const startButton = el(doc, "button", { class: "start-session" }, "Start clarification");
  const loadButton = el(doc, "button", { class: "load-example" }, "Load example");
  const notice = el(doc, "p", { class: "notice" });

  loadButton.addEventListener("click", () => {
    scenarioInput.value = EXAMPLE_SCENARIO;
  });

  startButton.addEventListener("click", async () => {
    const scenario = scenarioInput.value.trim();
    if (!scenario) {
      notice.textContent = "Enter a scenario first.";
      return;
    }
    startButton.disabled = true;
    notice.textContent = "Starting session...";
    try {
      const snapshot = await ctx.api.createSession(scenario, Number(roundsInput.value) || 0);
      ctx.registry.addSession(snapshot.session_id);
      ctx.navigate(`#/sessions/${snapshot.session_id}`);
    } catch (err) {
      notice.textContent = err instanceof ApiError ? err.message : String(err);
      startButton.disabled = false;
    }
  });

  const runInput = el(doc, "input", { class: "run-id-input", type: "text", placeholder: "run id" });
  const openRunButton = el(doc, "button", { class: "open-run" }, "Open run");
  openRunButton.addEventListener("click", () => {
    const runId = runInput.value.trim();
    if (runId) ctx.navigate(`#/runs/${runId}`);
  });

  const recent = el(doc, "div", { class: "recent" });
  const sessionList = el(doc, "ul", { class: "recent-sessions" });
  for (const id of ctx.registry.sessions) {
    const link = el(doc, "a", { href: `#/sessions/${id}` }, id);
    sessionList.append(el(doc, "li", {}, link));
  }
  const runList = el(doc, "ul", { class: "recent-runs" });
  for (const id of ctx.registry.runs) {
    const link = el(doc, "a", { href: `#/runs/${id}` }, id);
    runList.append(el(doc, "li", {}, link));
  }
  if (ctx.registry.sessions.length || ctx.registry.runs.length) {
    recent.append(el(doc, "h2", {}, "This visit"));
    if (ctx.registry.sessions.length) recent.append(el(doc, "h3", {}, "Sessions"), sessionList);
    if (ctx.registry.runs.length) recent.append(el(doc, "h3", {}, "Runs"), runList);
  }

  root.append(
    el(doc, "section", { class: "panel" },
      el(doc, "h2", {}, "New scenario"),
      el(doc, "p", { class: "hint" },
        "Write a Feature / Given / When / Then scenario. The Given step names the page under test."),
      scenarioInput,
      el(doc, "div", { class: "controls" },
        loadButton,
        el(doc, "label", {}, "max rounds ", roundsInput),
        startButton),
      notice),
    el(doc, "section", { class: "panel" },
      el(doc, "h2", {}, "Existing run"),
      el(doc, "div", { class: "controls" }, runInput, openRunButton)),
    recent,
  );
  return {};
}

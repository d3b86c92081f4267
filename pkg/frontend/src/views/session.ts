/** Clarification panel for one session.
 *
 * Subscribes to the session's event stream, renders questions as they
 * arrive, submits the tester's free-text answers, and shows the rewritten
 * scenario as a diff once the session is done. A dropped stream is
 * retried with backoff, re-syncing the snapshot over GET each time.
 */

import { ApiError } from "../api.js";
import type { SessionSnapshot, SuiteCreated } from "../api.js";
import type { AppContext, View } from "../context.js";
import { diffLines } from "../diff.js";
import { append, clear, el } from "../dom.js";
import { applyEvent, newModel } from "../state.js";
import type { SessionModel } from "../state.js";

export function renderSession(root: HTMLElement, ctx: AppContext, sessionId: string): View {
  const doc = root.ownerDocument;
  clear(root);
  const container = el(doc, "div", { class: "session-view" });
  root.append(container);

  let model: SessionModel | null = null;
  let suite: SuiteCreated | null = null;
  let launching = false;
  let disposed = false;
  let stream: { close(): void } | null = null;

  function render(): void {
    if (disposed || model === null) return;
    clear(container);
    container.append(
      renderHead(model),
      renderScenario(model),
      renderPage(model),
      renderQuestions(model),
      renderResult(model),
    );
  }

  function renderHead(m: SessionModel): HTMLElement {
    return el(doc, "section", { class: "panel" },
      el(doc, "h2", {},
        `Session ${sessionId} `,
        el(doc, "span", { class: `chip state-chip state-${m.snapshot.state}` }, m.snapshot.state),
        " ",
        el(doc, "span", { class: `stream-status stream-${m.stream}` }, m.stream)),
      m.notice ? el(doc, "p", { class: "notice" }, m.notice) : null,
    );
  }

  function renderScenario(m: SessionModel): HTMLElement {
    const section = el(doc, "section", { class: "panel scenario-panel" });
    if (m.snapshot.state === "done" && m.snapshot.context) {
      section.append(el(doc, "h3", {}, "Scenario (rewritten)"));
      const block = el(doc, "div", { class: "diff" });
      for (const line of diffLines(m.snapshot.scenario, m.snapshot.context.scenario)) {
        const prefix = line.kind === "added" ? "+ " : line.kind === "removed" ? "- " : "  ";
        block.append(el(doc, "div", { class: `diff-line diff-${line.kind}` }, prefix + line.text));
      }
      section.append(block);
    } else {
      section.append(
        el(doc, "h3", {}, "Scenario"),
        el(doc, "pre", { class: "scenario-text" }, m.snapshot.scenario),
      );
    }
    return section;
  }

  function renderPage(m: SessionModel): HTMLElement {
    const section = el(doc, "section", { class: "panel page-panel" });
    const page = m.snapshot.page;
    if (!page) return section;
    section.append(el(doc, "h3", {}, `Probed page: ${page.title || page.url}`));
    const table = el(doc, "table", { class: "elements" });
    table.append(el(doc, "tr", {},
      el(doc, "th", {}, "element"),
      el(doc, "th", {}, "name"),
      el(doc, "th", {}, "label"),
      el(doc, "th", {}, "type")));
    for (const element of page.elements) {
      table.append(el(doc, "tr", { class: "element-row" },
        el(doc, "td", {}, element.tag),
        el(doc, "td", {}, element.name || element.dom_id),
        el(doc, "td", {}, element.label),
        el(doc, "td", {}, element.control_type)));
    }
    section.append(table);
    return section;
  }

  function renderQuestions(m: SessionModel): HTMLElement {
    const section = el(doc, "section", { class: "panel questions-panel" });
    if (m.snapshot.state !== "waiting" || m.snapshot.questions.length === 0) return section;
    section.append(el(doc, "h3", {}, "The pipeline asks"));
    const inputs: [string, HTMLTextAreaElement][] = [];
    for (const question of m.snapshot.questions) {
      const input = el(doc, "textarea", { class: "answer-input", rows: "3", "data-question": question.id });
      input.value = m.drafts[question.id] ?? "";
      input.disabled = m.submitting;
      input.addEventListener("input", () => {
        m.drafts[question.id] = input.value;
      });
      inputs.push([question.id, input]);
      section.append(
        el(doc, "p", { class: "question-text", "data-question": question.id }, question.text),
        input,
      );
    }
    const send = el(doc, "button", { class: "send-answers" }, m.submitting ? "Sending..." : "Send answers");
    send.disabled = m.submitting;
    send.addEventListener("click", async () => {
      const answers: Record<string, string> = {};
      for (const [id, input] of inputs) answers[id] = input.value;
      m.submitting = true;
      m.notice = "";
      render();
      try {
        // server reply is the confirmed state; events will follow
        m.snapshot = await ctx.api.submitAnswers(sessionId, answers);
        m.drafts = {};
      } catch (err) {
        m.notice = err instanceof ApiError ? err.message : String(err);
      }
      m.submitting = false;
      render();
    });
    section.append(send);
    return section;
  }

  function renderResult(m: SessionModel): HTMLElement {
    const section = el(doc, "section", { class: "panel result-panel" });
    if (m.snapshot.state === "failed") {
      section.append(
        el(doc, "h3", {}, "Clarification failed"),
        el(doc, "p", { class: "error-detail" },
          `${m.snapshot.error ?? "unknown error"} (exit code ${m.snapshot.exit_code ?? "?"})`),
      );
      return section;
    }
    const context = m.snapshot.context;
    if (m.snapshot.state !== "done" || !context) return section;

    section.append(
      el(doc, "h3", {}, "Clarified context"),
      el(doc, "p", { class: "context-stats" },
        `effective: ${context.is_effective} | rounds: ${m.snapshot.rounds ?? 0} | ` +
        `questions: ${m.snapshot.questions_asked ?? 0}`),
    );
    const params = el(doc, "table", { class: "parameters" });
    params.append(el(doc, "tr", {}, el(doc, "th", {}, "parameter"), el(doc, "th", {}, "value")));
    for (const parameter of context.parameter_list) {
      params.append(el(doc, "tr", { class: "parameter-row" },
        el(doc, "td", {}, parameter.name),
        el(doc, "td", {}, parameter.value)));
    }
    section.append(params);

    const strengthInput = el(doc, "input", { class: "strength-input", type: "number", value: "2", min: "1", max: "2" });
    const seedInput = el(doc, "input", { class: "seed-input", type: "number", value: "0" });
    const generate = el(doc, "button", { class: "generate-suite" }, "Generate suite");
    const runButton = el(doc, "button", { class: "run-suite" }, "Run suite");
    const status = el(doc, "p", { class: "launch-status" });

    generate.disabled = launching;
    runButton.disabled = launching || suite === null;

    generate.addEventListener("click", async () => {
      launching = true;
      render();
      try {
        suite = await ctx.api.createSuite({
          session_id: sessionId,
          strength: Number(strengthInput.value) || 2,
          seed: Number(seedInput.value) || 0,
        });
        if (model) model.notice = "";
      } catch (err) {
        if (model) model.notice = err instanceof ApiError ? err.message : String(err);
      }
      launching = false;
      render();
    });

    runButton.addEventListener("click", async () => {
      if (suite === null) return;
      launching = true;
      status.textContent = "Running suite...";
      render();
      try {
        const run = await ctx.api.createRun({ suite_id: suite.suite_id, session_id: sessionId });
        ctx.registry.addRun(run.run_id);
        ctx.navigate(`#/runs/${run.run_id}`);
        return;
      } catch (err) {
        if (model) model.notice = err instanceof ApiError ? err.message : String(err);
      }
      launching = false;
      render();
    });

    append(section,
      el(doc, "h3", {}, "Test the scenario"),
      el(doc, "div", { class: "controls" },
        el(doc, "label", {}, "strength ", strengthInput),
        el(doc, "label", {}, "seed ", seedInput),
        generate,
        runButton),
      suite
        ? el(doc, "p", { class: "suite-summary", "data-suite": suite.suite_id },
            `Suite ${suite.suite_id}: ${suite.tests} test(s), ${suite.dropped} dropped.`)
        : null,
      status,
    );
    return section;
  }

  async function resync(): Promise<void> {
    try {
      const snapshot = await ctx.api.getSession(sessionId);
      if (model) {
        model.snapshot = snapshot;
        render();
      }
    } catch {
      // the retry loop will try again; keep the last good snapshot
    }
  }

  async function start(): Promise<void> {
    let snapshot: SessionSnapshot;
    try {
      snapshot = await ctx.api.getSession(sessionId);
    } catch (err) {
      clear(container);
      container.append(el(doc, "section", { class: "panel" },
        el(doc, "p", { class: "notice" },
          err instanceof ApiError ? err.message : String(err))));
      return;
    }
    if (disposed) return;
    model = newModel(snapshot);
    render();
    stream = ctx.subscribe(ctx.api.eventsUrl(sessionId), {
      onMessage(message) {
        if (!model) return;
        model.snapshot = applyEvent(model.snapshot, message);
        model.stream = "live";
        render();
      },
      onRetry() {
        if (!model) return;
        model.stream = "reconnecting";
        render();
        void resync();
      },
      onClose(reason) {
        if (!model || reason === "closed") return;
        model.stream = "closed";
        render();
      },
      isFinished() {
        return model !== null &&
          (model.snapshot.state === "done" || model.snapshot.state === "failed");
      },
    });
  }

  void start();

  return {
    dispose() {
      disposed = true;
      stream?.close();
    },
  };
}

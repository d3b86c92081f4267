/** Run view: the suite's rows with validity coloring, per-scenario
 * pass/fail, detected errors grouped by partition, and the metrics panel.
 * Every displayed count comes verbatim from the API payloads.
 */

import { ApiError } from "../api.js";
import type { MetricsPayload, Report, ReportsPayload } from "../api.js";
import type { AppContext, View } from "../context.js";
import { clear, el } from "../dom.js";

type PolarityFilter = "all" | "positive" | "negative";

const METRIC_LABELS: [string, string][] = [
  ["scenarios_generated", "scenarios generated"],
  ["scenarios_executed", "scenarios executed"],
  ["passed", "passed"],
  ["errors_detected", "errors detected"],
  ["indeterminate", "indeterminate"],
  ["error_type_count", "distinct error types"],
  ["clar_time", "clarification time (s)"],
  ["clar_tokens", "clarification tokens"],
  ["clar_interactions", "clarification interactions"],
  ["test_time", "testing time (s)"],
  ["test_tokens", "testing tokens"],
  ["test_interactions", "testing interactions"],
];

function formatMetric(key: string, value: number): string {
  return key.endsWith("_time") ? value.toFixed(2) : String(value);
}

function reportPolarity(report: Report): string {
  return report.polarity ?? (report.expected === "rejected" ? "negative" : "positive");
}

function matchesErrorType(report: Report, parameter: string, partition: string): boolean {
  if (!report.error_detected) return false;
  if (parameter === "") return report.all_valid === true;
  return (report.classes ?? []).some(
    (c) => c.parameter === parameter && c.partition_ref === partition && c.validity === "invalid",
  );
}

export function renderRun(root: HTMLElement, ctx: AppContext, runId: string): View {
  const doc = root.ownerDocument;
  clear(root);
  const container = el(doc, "div", { class: "run-view", "data-run-id": runId });
  root.append(container);
  let disposed = false;

  let polarity: PolarityFilter = "all";
  let errorsOnly = false;

  function render(reports: ReportsPayload, metrics: MetricsPayload): void {
    if (disposed) return;
    clear(container);
    const suite = reports.suite;
    container.append(el(doc, "section", { class: "panel" },
      el(doc, "h2", {}, `Run ${runId}`),
      el(doc, "p", { class: "run-suite-info" },
        `suite ${suite.suite_id ?? "?"} | strength ${suite.strength ?? "?"} | seed ${suite.seed ?? "?"}`)));

    container.append(renderMetrics(metrics));
    container.append(renderRows(reports.reports));
    container.append(renderErrorGroups(reports.reports, metrics));
  }

  function renderMetrics(payload: MetricsPayload): HTMLElement {
    const table = el(doc, "table", { class: "metrics" });
    const values = payload.metrics as unknown as Record<string, number>;
    for (const [key, label] of METRIC_LABELS) {
      table.append(el(doc, "tr", {},
        el(doc, "th", {}, label),
        el(doc, "td", { "data-metric": key }, formatMetric(key, values[key]))));
    }
    return el(doc, "section", { class: "panel metrics-panel" },
      el(doc, "h3", {}, "Metrics"), table);
  }

  function renderRows(reports: Report[]): HTMLElement {
    const section = el(doc, "section", { class: "panel rows-panel" });
    section.append(el(doc, "h3", {}, "Test rows"));
    if (reports.length === 0) {
      section.append(el(doc, "p", { class: "empty-state" }, "This suite has no test rows."));
      return section;
    }

    const polaritySelect = el(doc, "select", { class: "polarity-filter" },
      el(doc, "option", { value: "all" }, "all polarities"),
      el(doc, "option", { value: "positive" }, "positive"),
      el(doc, "option", { value: "negative" }, "negative"));
    polaritySelect.value = polarity;
    const errorsBox = el(doc, "input", { class: "errors-filter", type: "checkbox" });
    errorsBox.checked = errorsOnly;

    const parameters = (reports.find((r) => r.classes?.length)?.classes ?? []).map(
      (c) => c.parameter,
    );
    const table = el(doc, "table", { class: "rows" });
    const header = el(doc, "tr", {}, el(doc, "th", {}, "test"));
    for (const name of parameters) header.append(el(doc, "th", {}, name));
    header.append(el(doc, "th", {}, "oracle"), el(doc, "th", {}, "outcome"), el(doc, "th", {}, "pass"));
    table.append(header);

    const body = el(doc, "tbody", { class: "rows-body" });
    table.append(body);

    const redraw = (): void => {
      clear(body);
      for (const report of reports) {
        if (polarity !== "all" && reportPolarity(report) !== polarity) continue;
        if (errorsOnly && !report.error_detected) continue;
        const row = el(doc, "tr", {
          class: `test-row ${report.error_detected ? "row-error" : ""}`,
          "data-test": report.test_id,
        });
        row.append(el(doc, "td", {}, report.test_id));
        const classes = report.classes ?? [];
        for (let i = 0; i < parameters.length; i++) {
          const cell = classes[i];
          row.append(cell
            ? el(doc, "td", { class: `value-cell ${cell.validity}`, title: cell.partition_ref }, cell.value)
            : el(doc, "td", {}, "-"));
        }
        row.append(
          el(doc, "td", { class: "oracle-cell" }, report.oracle ?? ""),
          el(doc, "td", {}, report.outcome),
          el(doc, "td", { class: report.is_pass ? "pass" : "fail" }, report.is_pass ? "pass" : "FAIL"),
        );
        body.append(row);
      }
    };

    polaritySelect.addEventListener("change", () => {
      polarity = polaritySelect.value as PolarityFilter;
      redraw();
    });
    errorsBox.addEventListener("change", () => {
      errorsOnly = errorsBox.checked;
      redraw();
    });
    redraw();

    section.append(
      el(doc, "div", { class: "controls" },
        polaritySelect,
        el(doc, "label", {}, errorsBox, " errors only")),
      table,
    );
    return section;
  }

  function renderErrorGroups(reports: Report[], payload: MetricsPayload): HTMLElement {
    const section = el(doc, "section", { class: "panel errors-panel" });
    section.append(el(doc, "h3", {}, "Detected errors"));
    if (payload.metrics.error_types.length === 0) {
      section.append(el(doc, "p", { class: "empty-state" }, "No errors detected."));
      return section;
    }
    for (const [parameter, partition] of payload.metrics.error_types) {
      const label = parameter ? `${parameter}: ${partition}` : partition;
      const members = reports.filter((r) => matchesErrorType(r, parameter, partition));
      const list = el(doc, "ul", {});
      for (const report of members) {
        list.append(el(doc, "li", { class: "error-member" },
          `${report.test_id}: expected ${report.expected}, saw ${report.outcome}`));
      }
      section.append(el(doc, "div", { class: "error-group", "data-error-type": label },
        el(doc, "h4", {}, label), list));
    }
    return section;
  }

  async function start(): Promise<void> {
    try {
      const [reports, metrics] = await Promise.all([
        ctx.api.getReports(runId),
        ctx.api.getMetrics(runId),
      ]);
      render(reports, metrics);
    } catch (err) {
      clear(container);
      container.append(el(doc, "section", { class: "panel" },
        el(doc, "p", { class: "notice" },
          err instanceof ApiError ? err.message : String(err))));
    }
  }

  void start();

  return {
    dispose() {
      disposed = true;
    },
  };
}

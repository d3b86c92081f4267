/** Typed client for the pipeline HTTP API.
 *
 * The UI talks to the server exclusively through the functions here, and
 * they cover exactly the documented endpoints: sessions (create, get,
 * answers, events), suites, runs, reports, and metrics.
 */

export type SessionState = "pending" | "running" | "waiting" | "done" | "failed";

export interface Question {
  id: string;
  text: string;
  fields: string[];
}

export interface PageElement {
  tag: string;
  name: string;
  dom_id: string;
  label: string;
  control_type: string;
  value: string;
  options: string[];
  href: string;
}

export interface PageSnapshot {
  url: string;
  status: number;
  title: string;
  text: string;
  elements: PageElement[];
}

export interface Parameter {
  name: string;
  value: string;
  placeholder: string;
}

export interface ScenarioContext {
  scenario: string;
  parameter_list: Parameter[];
  is_effective: boolean;
  scenario_template: string;
  transcript_ref: string;
}

export interface SessionSnapshot {
  session_id: string;
  scenario: string;
  state: SessionState;
  questions: Question[];
  page?: PageSnapshot;
  context?: ScenarioContext;
  rounds?: number;
  questions_asked?: number;
  error?: string;
  exit_code?: number;
}

export interface SuiteCreated {
  suite_id: string;
  dir: string;
  tests: number;
  dropped: number;
}

export interface EqClass {
  parameter: string;
  value: string;
  validity: "valid" | "invalid";
  partition_ref: string;
}

export interface Metrics {
  scenarios_generated: number;
  scenarios_executed: number;
  passed: number;
  errors_detected: number;
  indeterminate: number;
  error_types: [string, string][];
  error_type_count: number;
  clar_time: number;
  clar_tokens: number;
  clar_interactions: number;
  test_time: number;
  test_tokens: number;
  test_interactions: number;
}

export interface RunCreated {
  run_id: string;
  suite_id: string;
  backend: string;
  exit_code: number;
  metrics: Metrics;
}

export interface Report {
  test_id: string;
  feature: string;
  scenario_text: string;
  expected: string;
  outcome: string;
  is_pass: boolean;
  error_detected: boolean;
  narrative: string;
  detail: string;
  backend: string;
  elapsed: number;
  // suite row data joined in by the server
  classes?: EqClass[];
  all_valid?: boolean;
  polarity?: string;
  oracle?: string;
}

export interface ReportsPayload {
  run_id: string;
  suite: { suite_id: string | null; strength: number | null; seed: number | null };
  reports: Report[];
}

export interface MetricsPayload {
  run_id: string;
  metrics: Metrics;
  markdown: string;
}

export interface CreateSuiteBody {
  session_id?: string;
  suite_id?: string;
  seed?: number;
  strength?: number;
  values_per_partition?: number;
}

export interface CreateRunBody {
  suite_id: string;
  backend?: string;
  session_id?: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface Api {
  createSession(scenario: string, maxRounds?: number): Promise<SessionSnapshot>;
  getSession(sessionId: string): Promise<SessionSnapshot>;
  submitAnswers(sessionId: string, answers: Record<string, string>): Promise<SessionSnapshot>;
  createSuite(body: CreateSuiteBody): Promise<SuiteCreated>;
  createRun(body: CreateRunBody): Promise<RunCreated>;
  getReports(runId: string): Promise<ReportsPayload>;
  getMetrics(runId: string): Promise<MetricsPayload>;
  eventsUrl(sessionId: string): string;
}

export function createApi(baseUrl = "", fetchFn?: FetchLike): Api {
  const doFetch: FetchLike = fetchFn ?? ((url, init) => fetch(url, init));

  async function request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let reply: Response;
    try {
      reply = await doFetch(baseUrl + path, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, err instanceof Error ? err.message : String(err));
    }
    if (!reply.ok) {
      let detail = reply.statusText || `status ${reply.status}`;
      try {
        const parsed = await reply.json();
        if (parsed && typeof parsed.detail === "string") detail = parsed.detail;
        else if (parsed !== undefined) detail = JSON.stringify(parsed.detail ?? parsed);
      } catch {
        // body was not JSON; keep the status text
      }
      throw new ApiError(reply.status, detail);
    }
    return (await reply.json()) as T;
  }

  return {
    createSession(scenario, maxRounds = 3) {
      return request("POST", "/sessions", { scenario, max_rounds: maxRounds });
    },
    getSession(sessionId) {
      return request("GET", `/sessions/${encodeURIComponent(sessionId)}`);
    },
    submitAnswers(sessionId, answers) {
      return request("POST", `/sessions/${encodeURIComponent(sessionId)}/answers`, { answers });
    },
    createSuite(body) {
      return request("POST", "/suites", body);
    },
    createRun(body) {
      return request("POST", "/runs", body);
    },
    getReports(runId) {
      return request("GET", `/runs/${encodeURIComponent(runId)}/reports`);
    },
    getMetrics(runId) {
      return request("GET", `/runs/${encodeURIComponent(runId)}/metrics`);
    },
    eventsUrl(sessionId) {
      return `${baseUrl}/sessions/${encodeURIComponent(sessionId)}/events`;
    },
  };
}

/** Client-side session state.
 *
 * The snapshot sub-object belongs to the server: it is replaced wholesale
 * from GET responses and stream events, never edited field by field from
 * user input. Everything the tester owns (answer drafts, stream status,
 * submission flags) lives next to it.
 */

import type { Question, ScenarioContext, SessionSnapshot } from "./api.js";
import type { SseMessage } from "./sse.js";

export type StreamStatus = "connecting" | "live" | "reconnecting" | "closed";

export interface SessionModel {
  snapshot: SessionSnapshot;
  drafts: Record<string, string>;
  stream: StreamStatus;
  submitting: boolean;
  notice: string;
}

export function newModel(snapshot: SessionSnapshot): SessionModel {
  return { snapshot, drafts: {}, stream: "connecting", submitting: false, notice: "" };
}

interface QuestionsEvent {
  questions: Question[];
}

interface DoneEvent {
  context: ScenarioContext;
}

interface ErrorEvent {
  error: string;
  exit_code: number;
}

/** Fold one stream event into a snapshot. Unknown event types are a
 * server extension and leave the snapshot untouched. */
export function applyEvent(snapshot: SessionSnapshot, message: SseMessage): SessionSnapshot {
  const data = JSON.parse(message.data);
  switch (message.event) {
    case "state":
      return { ...snapshot, state: data.state };
    case "page":
      return { ...snapshot, page: data.page };
    case "questions":
      return { ...snapshot, questions: (data as QuestionsEvent).questions };
    case "answered":
      return { ...snapshot, questions: [] };
    case "done":
      return { ...snapshot, state: "done", questions: [], context: (data as DoneEvent).context };
    case "error": {
      const err = data as ErrorEvent;
      return { ...snapshot, state: "failed", error: err.error, exit_code: err.exit_code };
    }
    default:
      return snapshot;
  }
}

/** Session and run ids created during this visit, newest first. */
export class Registry {
  sessions: string[] = [];
  runs: string[] = [];

  addSession(id: string): void {
    this.sessions = [id, ...this.sessions.filter((s) => s !== id)];
  }

  addRun(id: string): void {
    this.runs = [id, ...this.runs.filter((r) => r !== id)];
  }
}

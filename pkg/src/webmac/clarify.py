"""Human-in-the-loop scenario clarification.

The loop: analyze the scenario against the probed page, ask the tester
about whatever inputs the page needs but the scenario lacks, merge the
answers into a rewritten scenario, and re-analyze. It ends when the
analysis finds nothing missing (or the round limit trips), then a
summary and a ScenarioContext are produced for the transform stage.
"""

from __future__ import annotations

import queue
import re
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Sequence

from webmac.errors import (
    ClarificationLoopExceeded,
    ClarifyError,
    FetchTimeout,
    NetworkError,
    NonHtmlResponse,
    NothingToClarify,
    ProbeError,
    ProbeFailed,
    ProviderUnavailable,
    ScenarioError,
    SchemaViolation,
    ScriptExhausted,
    UnknownQuestion,
    WrongState,
)
from webmac.probe import PageSnapshot, ProbeResult, is_fillable, probe
from webmac.runtime import AgentRuntime, Role, Transcript
from webmac.scenario import (
    Parameter,
    ScenarioContext,
    TestScenario,
    extract_parameters,
    make_template,
    parse_gherkin,
)
from webmac.matching import match_field

__all__ = [
    "Question",
    "ClarifyOutcome",
    "SessionState",
    "ClarificationSession",
    "run_clarification",
    "missing_fields",
    "field_name",
    "clarify_exit_code",
    "MAX_ROUNDS",
]

MAX_ROUNDS = 3


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    fields: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"id": self.id, "text": self.text, "fields": list(self.fields)}


@dataclass(frozen=True)
class ClarifyOutcome:
    context: ScenarioContext
    transcript: Transcript
    rounds: int
    questions_asked: int


def field_name(element) -> str:
    """Stable field name for a page element: name, else label, else id."""
    if element.name:
        return element.name
    if element.label:
        return re.sub(r"[^a-z0-9]+", "_", element.label.lower()).strip("_")
    return element.dom_id


def missing_fields(params: Sequence[Parameter], page: PageSnapshot) -> list[str]:
    """Fillable page fields no scenario parameter covers, in page order."""
    param_names = [p.name for p in params]
    missing = []
    for element in page.elements:
        if not is_fillable(element):
            continue
        name = field_name(element)
        if name and match_field(name, param_names) is None:
            missing.append(name)
    return missing


AnswerFn = Callable[[Sequence[Question]], Mapping[str, str]]


def _validated_answers(
    questions: Sequence[Question], answers: Mapping[str, str]
) -> dict[str, str]:
    known = {q.id for q in questions}
    for answer_id in answers:
        if answer_id not in known:
            raise UnknownQuestion(answer_id)
    return {q.id: answers.get(q.id, "") for q in questions}


def run_clarification(
    scenario: TestScenario,
    page: PageSnapshot,
    runtime: AgentRuntime,
    answer_fn: AnswerFn,
    *,
    max_rounds: int = MAX_ROUNDS,
    transcript_id: str = "clarify",
) -> ClarifyOutcome:
    """Drive the clarification loop to a complete scenario.

    answer_fn receives the pending questions and returns answers keyed by
    question id. Raises ClarificationLoopExceeded when max_rounds rewrites
    still leave the scenario incomplete, NothingToClarify when analysis
    wants inputs but no questions can be asked.
    """
    transcript = Transcript(transcript_id, "clarify")
    page_payload = page.to_dict()
    current = scenario
    rounds = 0
    questions_asked = 0

    while True:
        params = extract_parameters(current)
        analysis = runtime.invoke(
            Role.ANALYST,
            {
                "kind": "page",
                "scenario": current.raw,
                "parameters": [p.name for p in params],
                "probe_exit": 0,
                "page": page_payload,
            },
            transcript,
        )
        if analysis["is_clarify"] == 0:
            break
        if rounds >= max_rounds:
            raise ClarificationLoopExceeded(max_rounds)
        rounds += 1

        local_missing = missing_fields(params, page)
        reply = runtime.invoke(
            Role.CLARIFIER,
            {
                "scenario": current.raw,
                "missing_fields": local_missing,
                "page_title": page.title,
            },
            transcript,
        )
        questions = [
            Question(id=q["id"], text=q["text"], fields=tuple(q["fields"]))
            for q in reply["questions"]
        ]
        if not questions:
            raise NothingToClarify()
        questions_asked += len(questions)

        answers = _validated_answers(questions, answer_fn(questions))
        rewritten = runtime.invoke(
            Role.REWRITER,
            {
                "scenario": current.raw,
                "questions": [q.to_dict() for q in questions],
                "answers": answers,
            },
            transcript,
        )
        current = parse_gherkin(rewritten["scenario"])

    params = extract_parameters(current)
    is_effective = not missing_fields(params, page)
    runtime.invoke(
        Role.SUMMARIZER,
        {
            "scenario": current.raw,
            "url": current.given_url,
            "parameters": [{"name": p.name, "value": p.value} for p in params],
            "is_effective": is_effective,
        },
        transcript,
    )
    context = ScenarioContext(
        scenario=current,
        parameter_list=tuple(params),
        is_effective=is_effective,
        scenario_template=make_template(current, params),
        transcript_ref=transcript_id,
    )
    return ClarifyOutcome(
        context=context,
        transcript=transcript,
        rounds=rounds,
        questions_asked=questions_asked,
    )


def clarify_exit_code(exc: BaseException) -> int:
    """CLI exit code for a clarification failure."""
    if isinstance(exc, (ScenarioError,)):
        return 2
    if isinstance(exc, (ProbeFailed, ProbeError)):
        return 3
    if isinstance(exc, (ProviderUnavailable, SchemaViolation, ScriptExhausted)):
        return 5
    if isinstance(exc, ClarifyError):
        return 4
    return 1


class SessionState(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    WAITING = "waiting"
    DONE = "done"
    FAILED = "failed"


class ClarificationSession:
    """One clarification run that pauses for answers over an API.

    The loop runs in a worker thread; it blocks inside its answer
    callback until submit_answers is called. Observers subscribe to an
    event queue (used for server-sent events) and read state snapshots.
    """

    def __init__(
        self,
        session_id: str,
        scenario_text: str,
        runtime: AgentRuntime,
        *,
        probe_fn: Callable[[str], ProbeResult] = probe,
        max_rounds: int = MAX_ROUNDS,
        answer_timeout: float | None = None,
    ):
        self.session_id = session_id
        self.scenario_text = scenario_text
        self.runtime = runtime
        self.probe_fn = probe_fn
        self.max_rounds = max_rounds
        self.answer_timeout = answer_timeout

        self.state = SessionState.PENDING
        self.page: PageSnapshot | None = None
        self.pending_questions: list[Question] = []
        self.outcome: ClarifyOutcome | None = None
        self.error: str | None = None
        self.exit_code: int | None = None
        self.events: list[dict] = []

        self._answers: dict[str, str] | None = None
        self._cond = threading.Condition()
        self._thread: threading.Thread | None = None
        self._subscribers: list[queue.Queue] = []

    # -- observation ---------------------------------------------------

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._cond:
            for event in self.events:
                q.put(event)
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._cond:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def _emit(self, event_type: str, data: dict) -> None:
        event = {"type": event_type, "data": data}
        self.events.append(event)
        for q in list(self._subscribers):
            q.put(event)

    def snapshot(self) -> dict:
        with self._cond:
            data = {
                "session_id": self.session_id,
                "scenario": self.scenario_text,
                "state": self.state.value,
                "questions": [q.to_dict() for q in self.pending_questions],
            }
            if self.page is not None:
                data["page"] = self.page.to_dict()
            if self.outcome is not None:
                data["context"] = self.outcome.context.to_dict()
                data["rounds"] = self.outcome.rounds
                data["questions_asked"] = self.outcome.questions_asked
            if self.error is not None:
                data["error"] = self.error
                data["exit_code"] = self.exit_code
            return data

    # -- control -------------------------------------------------------

    def start(self) -> "ClarificationSession":
        with self._cond:
            if self.state is not SessionState.PENDING:
                raise WrongState(self.state.value, SessionState.PENDING.value)
            self.state = SessionState.RUNNING
        self._emit("state", {"state": self.state.value})
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()
        return self

    def submit_answers(self, answers: Mapping[str, str]) -> None:
        with self._cond:
            if self.state is not SessionState.WAITING:
                raise WrongState(self.state.value, SessionState.WAITING.value)
            validated = _validated_answers(self.pending_questions, answers)
            self._answers = validated
            self.state = SessionState.RUNNING
            self._cond.notify_all()
        self._emit("answered", {"answers": dict(answers)})
        self._emit("state", {"state": SessionState.RUNNING.value})

    def join(self, timeout: float | None = None) -> None:
        if self._thread is not None:
            self._thread.join(timeout)

    # -- worker --------------------------------------------------------

    def _wait_for_answers(self, questions: Sequence[Question]) -> Mapping[str, str]:
        with self._cond:
            self.pending_questions = list(questions)
            self.state = SessionState.WAITING
        self._emit("state", {"state": SessionState.WAITING.value})
        self._emit("questions", {"questions": [q.to_dict() for q in questions]})
        with self._cond:
            got = self._cond.wait_for(
                lambda: self._answers is not None, timeout=self.answer_timeout
            )
            if not got:
                raise ClarifyError("timed out waiting for answers")
            answers = self._answers
            self._answers = None
            self.pending_questions = []
            return answers

    def _run(self) -> None:
        try:
            scenario = parse_gherkin(self.scenario_text)
            result = self.probe_fn(scenario.given_url)
            if not result.ok:
                raise ProbeFailed(result.exit_code)
            with self._cond:
                self.page = result.page
            self._emit("page", {"page": result.page.to_dict()})
            outcome = run_clarification(
                scenario,
                result.page,
                self.runtime,
                self._wait_for_answers,
                max_rounds=self.max_rounds,
                transcript_id=f"clarify-{self.session_id}",
            )
        except (NetworkError, FetchTimeout, NonHtmlResponse) as exc:
            self._fail(exc)
        except Exception as exc:  # surface everything to observers
            self._fail(exc)
        else:
            with self._cond:
                self.outcome = outcome
                self.state = SessionState.DONE
            self._emit("done", {"context": outcome.context.to_dict()})
            self._emit("state", {"state": SessionState.DONE.value})

    def _fail(self, exc: BaseException) -> None:
        with self._cond:
            self.error = str(exc)
            self.exit_code = clarify_exit_code(exc)
            self.state = SessionState.FAILED
        self._emit("error", {"error": self.error, "exit_code": self.exit_code})
        self._emit("state", {"state": SessionState.FAILED.value})

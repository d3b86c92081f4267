"""HTTP API over the pipeline: sessions, suites, runs, reports.

Sessions run their clarification loops on worker threads and stream
progress over server-sent events. Suites and runs persist under the
data directory, so they survive a restart; sessions do not.
"""

from __future__ import annotations

import json
import queue
from pathlib import Path
from typing import Iterator

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

import webmac
from webmac.clarify import ClarificationSession
from webmac.config import Settings, load_kb, load_settings, make_backend, make_provider
from webmac.errors import (
    NotFound,
    TransformError,
    UnknownQuestion,
    WebmacError,
    WrongState,
)
from webmac.pipeline import run_suite, write_run
from webmac.runtime import AgentRuntime
from webmac.scenario import ScenarioContext
from webmac.store import DataStore
from webmac.transform import load_suite, transform, write_suite

__all__ = ["create_app"]


class CreateSessionBody(BaseModel):
    scenario: str
    max_rounds: int = 3


class AnswersBody(BaseModel):
    answers: dict[str, str]


class CreateSuiteBody(BaseModel):
    session_id: str | None = None
    context: dict | None = None
    suite_id: str | None = None
    seed: int = 0
    strength: int = 2
    values_per_partition: int = 1


class CreateRunBody(BaseModel):
    suite_id: str | None = None
    suite_dir: str | None = None
    backend: str = "direct_http"
    run_id: str | None = None
    session_id: str | None = None


def create_app(settings: Settings | None = None) -> FastAPI:
    settings = settings if settings is not None else load_settings()
    store = DataStore(settings.data_dir)
    sessions: dict[str, ClarificationSession] = {}

    app = FastAPI(title="webmac", version=webmac.__version__)

    def _session(session_id: str) -> ClarificationSession:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")
        return session

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": webmac.__version__}

    @app.post("/sessions")
    def create_session(body: CreateSessionBody) -> dict:
        session_id = store.new_id("session")
        runtime = AgentRuntime(make_provider(settings))
        session = ClarificationSession(
            session_id, body.scenario, runtime, max_rounds=body.max_rounds
        )
        sessions[session_id] = session
        session.start()
        store.sessions.append({"event": "created", "session_id": session_id})
        return session.snapshot()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return _session(session_id).snapshot()

    @app.post("/sessions/{session_id}/answers")
    def post_answers(session_id: str, body: AnswersBody) -> dict:
        session = _session(session_id)
        try:
            session.submit_answers(body.answers)
        except WrongState as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except UnknownQuestion as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return session.snapshot()

    @app.get("/sessions/{session_id}/events")
    def session_events(session_id: str) -> StreamingResponse:
        session = _session(session_id)

        def stream() -> Iterator[str]:
            q = session.subscribe()
            try:
                while True:
                    try:
                        event = q.get(timeout=15.0)
                    except queue.Empty:
                        yield ": keep-alive\n\n"
                        continue
                    data = json.dumps(event["data"], sort_keys=True)
                    yield f"event: {event['type']}\ndata: {data}\n\n"
                    if event["type"] in ("done", "error"):
                        return
            finally:
                session.unsubscribe(q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    def _suite_context(body: CreateSuiteBody) -> ScenarioContext:
        if body.context is not None:
            try:
                return ScenarioContext.from_dict(body.context)
            except (KeyError, ValueError, WebmacError) as exc:
                raise HTTPException(status_code=422, detail=f"bad context: {exc}")
        if body.session_id is not None:
            session = _session(body.session_id)
            if session.outcome is None:
                raise HTTPException(
                    status_code=409,
                    detail=f"session {body.session_id} has not finished clarifying",
                )
            return session.outcome.context
        raise HTTPException(status_code=422, detail="need context or session_id")

    @app.post("/suites")
    def create_suite(body: CreateSuiteBody) -> dict:
        context = _suite_context(body)
        suite_id = body.suite_id or store.new_id("suite")
        try:
            out_dir = store.suite_dir(suite_id)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        runtime = AgentRuntime(make_provider(settings))
        try:
            suite = transform(
                context,
                load_kb(settings),
                runtime,
                strength=body.strength,
                seed=body.seed,
                values_per_partition=body.values_per_partition,
                suite_id=suite_id,
            )
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except (TransformError, WebmacError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        write_suite(suite, out_dir)
        store.record_transcript(suite.transcript)
        return {
            "suite_id": suite_id,
            "dir": str(out_dir),
            "tests": len(suite.tests),
            "dropped": len(suite.dropped),
        }

    @app.post("/runs")
    def create_run(body: CreateRunBody) -> dict:
        if body.suite_id:
            try:
                suite_dir = store.suite_dir(body.suite_id)
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
        elif body.suite_dir:
            suite_dir = Path(body.suite_dir)
        else:
            raise HTTPException(status_code=422, detail="need suite_id or suite_dir")
        try:
            suite = load_suite(suite_dir)
        except TransformError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        try:
            backend = make_backend(body.backend, settings)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        extra = []
        if body.session_id:
            session = _session(body.session_id)
            if session.outcome is not None:
                extra.append(session.outcome.transcript)
        run_id = body.run_id or store.new_id("run")
        try:
            run_dir = store.run_dir(run_id)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        runtime = AgentRuntime(make_provider(settings))
        result = run_suite(
            suite, backend, runtime, run_id=run_id, extra_transcripts=extra
        )
        write_run(result, run_dir)
        for transcript in result.transcripts:
            store.record_transcript(transcript)
        return {
            "run_id": run_id,
            "suite_id": result.suite_id,
            "backend": result.backend,
            "exit_code": result.exit_code,
            "metrics": result.metrics.to_dict(),
        }

    def _run_record(run_id: str) -> dict:
        try:
            run_file = store.run_dir(run_id) / "run.json"
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        if not run_file.is_file():
            raise HTTPException(status_code=404, detail=f"no run {run_id}")
        return json.loads(run_file.read_text(encoding="utf-8"))

    @app.get("/runs/{run_id}/reports")
    def run_reports(run_id: str) -> dict:
        record = _run_record(run_id)
        run_dir = store.run_dir(run_id)
        suite_record = record.get("suite", {})
        rows = {row["test_id"]: row for row in suite_record.get("tests", [])}
        reports = []
        for entry in record.get("reports", []):
            report_file = run_dir / entry["file"]
            if not report_file.is_file():
                continue
            report = json.loads(report_file.read_text(encoding="utf-8"))
            row = rows.get(report.get("test_id"))
            if row is not None:
                report["classes"] = row.get("classes", [])
                report["all_valid"] = row.get("all_valid")
                report["polarity"] = row.get("polarity")
                report["oracle"] = row.get("oracle")
            reports.append(report)
        return {
            "run_id": run_id,
            "suite": {
                "suite_id": suite_record.get("suite_id", record.get("suite_id")),
                "strength": suite_record.get("strength"),
                "seed": suite_record.get("seed"),
            },
            "reports": reports,
        }

    @app.get("/runs/{run_id}/metrics")
    def run_metrics(run_id: str) -> dict:
        record = _run_record(run_id)
        markdown_file = store.run_dir(run_id) / "metrics.md"
        markdown = (
            markdown_file.read_text(encoding="utf-8")
            if markdown_file.is_file()
            else ""
        )
        return {
            "run_id": run_id,
            "metrics": record.get("metrics", {}),
            "markdown": markdown,
        }

    if settings.ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=settings.ui_dir, html=True), name="ui")

    return app

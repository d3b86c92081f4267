"""Command line interface: clarify, transform, run, serve, fixture."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import click

import webmac
from webmac.clarify import clarify_exit_code, run_clarification
from webmac.config import (
    BACKENDS,
    PROVIDERS,
    load_kb,
    load_settings,
    make_backend,
    make_provider,
)
from webmac.errors import KbError, ProbeFailed, TransformError, WebmacError
from webmac.fixture import KNOWN_BUGS, FixtureServer
from webmac.kb import KnowledgeBase
from webmac.pipeline import load_context, run_suite, save_context, write_run
from webmac.probe import probe
from webmac.runtime import AgentRuntime
from webmac.scenario import parse_gherkin, serialize
from webmac.transform import load_suite, transform, write_suite

__all__ = ["main"]


def _settings(provider: str | None):
    settings = load_settings()
    if provider:
        settings = dataclasses.replace(settings, provider=provider)
    return settings


def _runtime(settings) -> AgentRuntime:
    return AgentRuntime(make_provider(settings))


def _scripted_answers(data):
    """Answer questions from a JSON dict (by id) or list (in asked order)."""
    cursor = [0]

    def answer(questions):
        if isinstance(data, dict):
            return {q.id: str(data.get(q.id, "")) for q in questions}
        answers = {}
        for q in questions:
            answers[q.id] = str(data[cursor[0]]) if cursor[0] < len(data) else ""
            cursor[0] += 1
        return answers

    return answer


def _prompted_answers(questions):
    answers = {}
    for q in questions:
        answers[q.id] = click.prompt(q.text, default="", show_default=False)
    return answers


@click.group()
@click.version_option(version=webmac.__version__, prog_name="webmac")
def main() -> None:
    """Turn loose web test scenarios into executed, measured test suites."""


@main.command()
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_file", type=click.Path(dir_okay=False), default=None,
              help="Write the clarified context JSON here.")
@click.option("--answers", "answers_file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON answers: object keyed by question id, or array in asked order.")
@click.option("--max-rounds", default=3, show_default=True)
@click.option("--provider", type=click.Choice(PROVIDERS), default=None)
def clarify(scenario_file, out_file, answers_file, max_rounds, provider):
    """Probe the target page and fill in what the scenario leaves out."""
    settings = _settings(provider)
    text = Path(scenario_file).read_text(encoding="utf-8")
    if answers_file:
        answer_fn = _scripted_answers(
            json.loads(Path(answers_file).read_text(encoding="utf-8"))
        )
    else:
        answer_fn = _prompted_answers
    try:
        runtime = _runtime(settings)
        scenario = parse_gherkin(text)
        result = probe(scenario.given_url)
        if not result.ok or result.page is None:
            raise ProbeFailed(result.exit_code)
        outcome = run_clarification(
            scenario, result.page, runtime, answer_fn, max_rounds=max_rounds
        )
    except WebmacError as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(clarify_exit_code(exc))
    context = outcome.context
    if out_file:
        save_context(out_file, context, outcome.transcript)
        click.echo(f"context written to {out_file}")
    click.echo(serialize(context.scenario))
    click.echo(
        f"effective: {context.is_effective}; parameters: "
        f"{', '.join(p.name for p in context.parameter_list) or 'none'}; "
        f"rounds: {outcome.rounds}; questions: {outcome.questions_asked}"
    )


@main.command("transform")
@click.argument("context_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--kb", "kb_file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--seed", default=0, show_default=True)
@click.option("--strength", default=2, show_default=True)
@click.option("--values-per-partition", default=1, show_default=True)
@click.option("--suite-id", default="suite", show_default=True)
@click.option("--provider", type=click.Choice(PROVIDERS), default=None)
def transform_cmd(context_file, out_dir, kb_file, seed, strength,
                  values_per_partition, suite_id, provider):
    """Expand a clarified context into a covering suite of scenarios."""
    settings = _settings(provider)
    try:
        runtime = _runtime(settings)
        context, _ = load_context(context_file)
        kb = KnowledgeBase.load(kb_file) if kb_file else load_kb(settings)
        suite = transform(
            context, kb, runtime,
            strength=strength, seed=seed,
            values_per_partition=values_per_partition, suite_id=suite_id,
        )
    except (TransformError, KbError, WebmacError) as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(1)
    write_suite(suite, out_dir)
    click.echo(
        f"{len(suite.tests)} test(s), {len(suite.dropped)} dropped -> {out_dir}"
    )


@main.command("run")
@click.argument("suite_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--backend", "backend_name", type=click.Choice(BACKENDS),
              default="direct_http", show_default=True)
@click.option("--context", "context_file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Clarified context JSON; folds its transcript into the metrics.")
@click.option("--run-id", default="run", show_default=True)
@click.option("--provider", type=click.Choice(PROVIDERS), default=None)
def run_cmd(suite_dir, out_dir, backend_name, context_file, run_id, provider):
    """Execute a suite directory and write reports plus run metrics."""
    settings = _settings(provider)
    try:
        runtime = _runtime(settings)
        suite = load_suite(suite_dir)
        backend = make_backend(backend_name, settings)
        extra = []
        if context_file:
            _, transcript = load_context(context_file)
            if transcript is not None:
                extra.append(transcript)
        result = run_suite(
            suite, backend, runtime, run_id=run_id, extra_transcripts=extra
        )
    except (WebmacError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(1)
    write_run(result, out_dir)
    m = result.metrics
    click.echo(
        f"{m.scenarios_executed} executed, {m.passed} passed, "
        f"{m.errors_detected} error(s) detected, {m.indeterminate} indeterminate "
        f"-> {out_dir}"
    )
    raise SystemExit(result.exit_code)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
@click.option("--data-dir", default=None, help="Overrides WEBMAC_DATA_DIR.")
@click.option("--provider", type=click.Choice(PROVIDERS), default=None)
def serve(host, port, data_dir, provider):
    """Serve the HTTP API (and the UI, when frontend/dist exists)."""
    import uvicorn

    from webmac.server import create_app

    settings = _settings(provider)
    if data_dir:
        settings = dataclasses.replace(settings, data_dir=Path(data_dir))
    app = create_app(settings)
    click.echo(f"webmac api on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True)
@click.option("--bug", "bugs", multiple=True, type=click.Choice(sorted(KNOWN_BUGS)),
              help="Seed a known fault into the fixture.")
def fixture(host, port, bugs):
    """Serve the built-in pet-clinic fixture to test against."""
    server = FixtureServer(port=port, host=host, bugs=set(bugs))
    click.echo(f"fixture on {server.base_url} (bugs: {', '.join(bugs) or 'none'})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()

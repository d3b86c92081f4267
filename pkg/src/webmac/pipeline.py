"""Glue between the stages: context files, suite runs, run directories."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from webmac.execute import Backend, TestReport, run_test
from webmac.metrics import RunMetrics, collect, render_markdown
from webmac.runtime import AgentRuntime, Transcript
from webmac.scenario import Parameter, ScenarioContext
from webmac.transform import LoadedSuite, LoadedTest

__all__ = [
    "RunResult",
    "save_context",
    "load_context",
    "parameters_for",
    "run_suite",
    "run_exit_code",
    "write_run",
    "load_run",
]


def save_context(
    path: str | Path,
    context: ScenarioContext,
    transcript: Transcript | None = None,
    summary: str = "",
) -> Path:
    """Persist a clarified context (plus its transcript) as one JSON file."""
    record = {"context": context.to_dict(), "summary": summary}
    if transcript is not None:
        record["transcript"] = transcript.to_dict()
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(
        json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return out


def load_context(path: str | Path) -> tuple[ScenarioContext, Transcript | None]:
    record = json.loads(Path(path).read_text(encoding="utf-8"))
    context = ScenarioContext.from_dict(record["context"])
    transcript = None
    if "transcript" in record:
        transcript = Transcript.from_dict(record["transcript"])
    return context, transcript


def parameters_for(test: LoadedTest) -> list[Parameter]:
    return [
        Parameter(name=c["parameter"], value=c["value"]) for c in test.classes
    ]


@dataclass
class RunResult:
    run_id: str
    suite_id: str
    backend: str
    reports: list[TestReport]
    transcripts: list[Transcript]
    metrics: RunMetrics
    exit_code: int
    # manifest rows of the suite that ran, so the run record stands alone
    suite_record: dict = field(default_factory=dict)


def run_exit_code(reports: Sequence[TestReport]) -> int:
    """0 clean, 1 when any error was detected, 6 when nothing was determinate."""
    if any(r.error_detected for r in reports):
        return 1
    if reports and all(r.outcome == "indeterminate" for r in reports):
        return 6
    return 0


def run_suite(
    suite: LoadedSuite,
    backend: Backend,
    runtime: AgentRuntime,
    *,
    run_id: str = "run",
    extra_transcripts: Sequence[Transcript] = (),
) -> RunResult:
    """Execute every test in the suite and fold the numbers.

    extra_transcripts (say, the clarification transcript that produced
    the suite) join the metrics but not the run's own transcript list.
    """
    reports: list[TestReport] = []
    transcripts: list[Transcript] = []
    for test in suite.tests:
        report, transcript = run_test(
            test.test_id, test.scenario, parameters_for(test), backend, runtime
        )
        reports.append(report)
        transcripts.append(transcript)
    classes_by_test = {
        entry["test_id"]: entry.get("classes", [])
        for entry in suite.manifest.get("tests", [])
    }
    metrics = collect(
        list(extra_transcripts) + transcripts,
        reports,
        classes_by_test=classes_by_test,
        scenarios_generated=len(suite.tests),
    )
    return RunResult(
        run_id=run_id,
        suite_id=suite.suite_id,
        backend=backend.name,
        reports=reports,
        transcripts=transcripts,
        metrics=metrics,
        exit_code=run_exit_code(reports),
        suite_record={
            "suite_id": suite.suite_id,
            "strength": suite.manifest.get("strength"),
            "seed": suite.manifest.get("seed"),
            "tests": list(suite.manifest.get("tests", [])),
        },
    )


def write_run(result: RunResult, out_dir: str | Path) -> Path:
    """Write reports/<scenario-id>.json, run.json, and metrics.md."""
    out = Path(out_dir)
    reports_dir = out / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    summary = []
    for report in result.reports:
        filename = f"{report.test_id}.json"
        (reports_dir / filename).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        summary.append(
            {
                "test_id": report.test_id,
                "file": f"reports/{filename}",
                "outcome": report.outcome,
                "is_pass": report.is_pass,
                "error_detected": report.error_detected,
            }
        )
    run_record = {
        "run_id": result.run_id,
        "suite_id": result.suite_id,
        "backend": result.backend,
        "exit_code": result.exit_code,
        "metrics": result.metrics.to_dict(),
        "suite": result.suite_record,
        "reports": summary,
        "transcripts": [t.to_dict() for t in result.transcripts],
    }
    (out / "run.json").write_text(
        json.dumps(run_record, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out / "metrics.md").write_text(render_markdown(result.metrics), encoding="utf-8")
    return out


def load_run(run_dir: str | Path) -> dict:
    return json.loads((Path(run_dir) / "run.json").read_text(encoding="utf-8"))

"""Aggregate cost and yield numbers for a pipeline run.

Clarification and testing costs are split by transcript tag; transform
transcripts count toward neither, since combination generation is a
bookkeeping step between the two. Error types group detected errors by
the invalid (parameter, partition) pair that provoked them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from webmac.execute import TestReport
from webmac.runtime import Transcript

__all__ = ["RunMetrics", "collect", "render_markdown"]

# label for an error on a row whose values were all supposed to be valid
UNEXPECTED_REJECTION = ("", "valid values rejected")


@dataclass(frozen=True)
class RunMetrics:
    scenarios_generated: int
    scenarios_executed: int
    passed: int
    errors_detected: int
    indeterminate: int
    error_types: tuple[tuple[str, str], ...]  # (parameter, partition)
    clar_time: float
    clar_tokens: int
    clar_interactions: int
    test_time: float
    test_tokens: int
    test_interactions: int

    @property
    def error_type_count(self) -> int:
        return len(self.error_types)

    def to_dict(self) -> dict:
        return {
            "scenarios_generated": self.scenarios_generated,
            "scenarios_executed": self.scenarios_executed,
            "passed": self.passed,
            "errors_detected": self.errors_detected,
            "indeterminate": self.indeterminate,
            "error_types": [list(pair) for pair in self.error_types],
            "error_type_count": self.error_type_count,
            "clar_time": self.clar_time,
            "clar_tokens": self.clar_tokens,
            "clar_interactions": self.clar_interactions,
            "test_time": self.test_time,
            "test_tokens": self.test_tokens,
            "test_interactions": self.test_interactions,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunMetrics":
        return cls(
            scenarios_generated=data["scenarios_generated"],
            scenarios_executed=data["scenarios_executed"],
            passed=data["passed"],
            errors_detected=data["errors_detected"],
            indeterminate=data["indeterminate"],
            error_types=tuple(tuple(pair) for pair in data["error_types"]),
            clar_time=data["clar_time"],
            clar_tokens=data["clar_tokens"],
            clar_interactions=data["clar_interactions"],
            test_time=data["test_time"],
            test_tokens=data["test_tokens"],
            test_interactions=data["test_interactions"],
        )


def _error_pairs(
    report: TestReport, classes: Sequence[Mapping] | None
) -> set[tuple[str, str]]:
    pairs = {
        (c["parameter"], c["partition_ref"])
        for c in classes or []
        if c.get("validity") == "invalid"
    }
    return pairs or {UNEXPECTED_REJECTION}


def collect(
    transcripts: Sequence[Transcript],
    reports: Sequence[TestReport],
    classes_by_test: Mapping[str, Sequence[Mapping]] | None = None,
    scenarios_generated: int | None = None,
) -> RunMetrics:
    """Fold transcripts and reports into one metrics record.

    classes_by_test maps test ids to the class dicts of the suite
    manifest, so detected errors can be attributed to partitions.
    """
    clar = [t for t in transcripts if t.tag == "clarify"]
    test = [t for t in transcripts if t.tag == "test"]

    error_types: set[tuple[str, str]] = set()
    for report in reports:
        if not report.error_detected:
            continue
        classes = (classes_by_test or {}).get(report.test_id)
        error_types |= _error_pairs(report, classes)

    return RunMetrics(
        scenarios_generated=(
            scenarios_generated if scenarios_generated is not None else len(reports)
        ),
        scenarios_executed=len(reports),
        passed=sum(1 for r in reports if r.is_pass),
        errors_detected=sum(1 for r in reports if r.error_detected),
        indeterminate=sum(1 for r in reports if r.outcome == "indeterminate"),
        error_types=tuple(sorted(error_types)),
        clar_time=sum(t.elapsed for t in clar),
        clar_tokens=sum(t.total_tokens for t in clar),
        clar_interactions=sum(t.interaction_count for t in clar),
        test_time=sum(t.elapsed for t in test),
        test_tokens=sum(t.total_tokens for t in test),
        test_interactions=sum(t.interaction_count for t in test),
    )


def _average(total: float, count: int) -> str:
    return f"{total / count:.2f}" if count else "-"


def render_markdown(metrics: RunMetrics) -> str:
    """The metrics record as a small markdown report."""
    n = metrics.scenarios_executed
    lines = [
        "# Run Metrics",
        "",
        "| metric | total | per scenario |",
        "| --- | ---: | ---: |",
        f"| scenarios generated | {metrics.scenarios_generated} | |",
        f"| scenarios executed | {metrics.scenarios_executed} | |",
        f"| passed | {metrics.passed} | |",
        f"| errors detected | {metrics.errors_detected} | |",
        f"| indeterminate | {metrics.indeterminate} | |",
        f"| distinct error types | {metrics.error_type_count} | |",
        f"| clarification time (s) | {metrics.clar_time:.2f} | {_average(metrics.clar_time, n)} |",
        f"| clarification tokens | {metrics.clar_tokens} | {_average(metrics.clar_tokens, n)} |",
        f"| clarification interactions | {metrics.clar_interactions} | {_average(metrics.clar_interactions, n)} |",
        f"| testing time (s) | {metrics.test_time:.2f} | {_average(metrics.test_time, n)} |",
        f"| testing tokens | {metrics.test_tokens} | {_average(metrics.test_tokens, n)} |",
        f"| testing interactions | {metrics.test_interactions} | {_average(metrics.test_interactions, n)} |",
    ]
    if metrics.error_types:
        lines += ["", "## Detected Error Types", ""]
        for parameter, partition in metrics.error_types:
            label = f"{parameter}: {partition}" if parameter else partition
            lines.append(f"- {label}")
    return "\n".join(lines) + "\n"

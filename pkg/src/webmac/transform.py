"""Turn one clarified scenario into a covering suite of test scenarios.

Each parameter's knowledge-base partitions become concrete equivalence
classes, a strength-2 (or strength-1) covering array combines them into
rows, and each row becomes a runnable scenario: template filled with the
row's values, oracle rewritten to expect success only when every value
is valid.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from webmac.errors import (
    EmptyOutput,
    EmptyPartitionOutput,
    NegationFailed,
    TransformError,
)
from webmac.kb import KbEntry, KnowledgeBase
from webmac.runtime import AgentRuntime, Role, Transcript
from webmac.scenario import (
    Polarity,
    ScenarioContext,
    TestScenario,
    classify_polarity,
    fill_template,
    parse_gherkin,
    serialize,
)

__all__ = [
    "EqClass",
    "TestRow",
    "GeneratedTest",
    "Suite",
    "LoadedTest",
    "LoadedSuite",
    "generate_classes",
    "covering_rows",
    "rewrite_oracle",
    "transform",
    "write_suite",
    "load_suite",
    "ORIGINAL_REF",
]

ORIGINAL_REF = "original"


@dataclass(frozen=True)
class EqClass:
    """One concrete value standing for a partition of a parameter."""

    parameter: str
    value: str
    validity: str  # "valid" | "invalid"
    partition_ref: str  # partition description, or "original"

    @property
    def is_valid(self) -> bool:
        return self.validity == "valid"

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "value": self.value,
            "validity": self.validity,
            "partition_ref": self.partition_ref,
        }


@dataclass(frozen=True)
class TestRow:
    row_id: str
    classes: tuple[EqClass, ...]  # one per parameter, in parameter order

    @property
    def assignment(self) -> dict[str, str]:
        return {c.parameter: c.value for c in self.classes}

    @property
    def all_valid(self) -> bool:
        return all(c.is_valid for c in self.classes)


@dataclass(frozen=True)
class GeneratedTest:
    test_id: str
    scenario: TestScenario
    row: TestRow


@dataclass
class Suite:
    suite_id: str
    context: ScenarioContext
    tests: list[GeneratedTest]
    dropped: list[dict]
    transcript: Transcript
    strength: int
    seed: int


def _usable(value: str) -> bool:
    if "\n" in value or "{" in value or "}" in value:
        return False
    return not ("'" in value and '"' in value)


def generate_classes(
    context: ScenarioContext,
    entry: KbEntry | None,
    runtime: AgentRuntime,
    transcript: Transcript,
    *,
    values_per_partition: int = 1,
) -> dict[str, list[EqClass]]:
    """Concrete classes per parameter, the original value appended last.

    Parameters without knowledge-base partitions keep only their original
    value. A partition whose generated values are all unusable raises
    EmptyPartitionOutput.
    """
    classes: dict[str, list[EqClass]] = {}
    for param in context.parameter_list:
        found: list[EqClass] = []
        seen: set[str] = set()
        partitions = entry.partitions_for(param.name) if entry is not None else None
        for partition in partitions.all if partitions is not None else ():
            reply = runtime.invoke(
                Role.EQ_CLASS_GENERATOR,
                {
                    "parameter": param.name,
                    "description": partition.description,
                    "hints": list(partition.hints),
                    "validity": partition.validity,
                    "count": values_per_partition,
                },
                transcript,
            )
            usable = [v for v in reply["values"] if _usable(v)]
            if not usable:
                raise EmptyPartitionOutput(f"{param.name}: {partition.description}")
            for value in usable:
                if value in seen:
                    continue
                seen.add(value)
                found.append(
                    EqClass(
                        parameter=param.name,
                        value=value,
                        validity=partition.validity,
                        partition_ref=partition.description,
                    )
                )
        if param.value not in seen:
            found.append(
                EqClass(
                    parameter=param.name,
                    value=param.value,
                    validity="valid",
                    partition_ref=ORIGINAL_REF,
                )
            )
        classes[param.name] = found
    return classes


def covering_rows(
    counts: Sequence[int], *, strength: int = 2, seed: int = 0
) -> list[tuple[int, ...]]:
    """Index rows covering all value pairs (strength 2) or values (strength 1).

    Rows are tuples of class indices, one per parameter, in the caller's
    parameter order. The row count for strength 2 is at least the product
    of the two largest counts and at most the full cartesian product.
    Ties are broken with a seeded generator, so output is a pure function
    of (counts, strength, seed).
    """
    if strength not in (1, 2):
        raise TransformError(f"unsupported strength {strength}; use 1 or 2")
    if any(n < 1 for n in counts):
        raise TransformError("every parameter needs at least one class")
    k = len(counts)
    if k == 0:
        return [()]
    if k == 1:
        return [(i,) for i in range(counts[0])]
    if strength == 1:
        height = max(counts)
        return [tuple(j % n for n in counts) for j in range(height)]

    rng = random.Random(seed)
    order = sorted(range(k), key=lambda i: -counts[i])  # stable on ties

    def n_at(pos: int) -> int:
        return counts[order[pos]]

    rows: list[list[int | None]] = [
        [a, b] + [None] * (k - 2) for a in range(n_at(0)) for b in range(n_at(1))
    ]

    for pos in range(2, k):
        uncovered: set[tuple[int, int, int]] = {
            (q, vq, vp)
            for q in range(pos)
            for vq in range(n_at(q))
            for vp in range(n_at(pos))
        }
        # horizontal growth: give every existing row a value for this column
        for row in rows:
            best_gain = -1
            best_values: list[int] = []
            for vp in range(n_at(pos)):
                gain = sum(
                    1
                    for q in range(pos)
                    if row[q] is not None and (q, row[q], vp) in uncovered
                )
                if gain > best_gain:
                    best_gain, best_values = gain, [vp]
                elif gain == best_gain:
                    best_values.append(vp)
            vp = best_values[0] if len(best_values) == 1 else rng.choice(best_values)
            row[pos] = vp
            for q in range(pos):
                if row[q] is not None:
                    uncovered.discard((q, row[q], vp))
        # vertical growth: place what horizontal growth missed
        while uncovered:
            q, vq, vp = min(uncovered)
            placed = False
            for row in rows:
                if row[q] == vq and row[pos] is None:
                    row[pos] = vp
                    placed = True
                    break
                if row[q] is None and row[pos] == vp:
                    row[q] = vq
                    placed = True
                    break
            if not placed:
                fresh: list[int | None] = [None] * k
                fresh[q], fresh[pos] = vq, vp
                rows.append(fresh)
            for row in rows:
                if row[q] == vq and row[pos] == vp:
                    for other in range(pos):
                        if row[other] is not None:
                            uncovered.discard((other, row[other], row[pos]))
                    break

    filled: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set()
    for row in rows:
        complete = [
            v if v is not None else rng.randrange(n_at(pos))
            for pos, v in enumerate(row)
        ]
        final = [0] * k
        for pos, param in enumerate(order):
            final[param] = complete[pos]
        row_tuple = tuple(final)
        if row_tuple not in seen:
            seen.add(row_tuple)
            filled.append(row_tuple)
    return filled


def rewrite_oracle(
    context: ScenarioContext,
    row: TestRow,
    runtime: AgentRuntime,
    transcript: Transcript,
) -> str:
    """Oracle text for a row: values substituted, polarity matching validity.

    Raises NegationFailed when the generated oracle does not classify as
    the polarity the row requires.
    """
    substitutions = [
        {"old": original, "new": c.value}
        for c, original in zip(
            row.classes, (p.value for p in context.parameter_list)
        )
        if c.value != original
    ]
    expected = Polarity.POSITIVE if row.all_valid else Polarity.NEGATIVE
    reply = runtime.invoke(
        Role.ORACLE_GENERATOR,
        {
            "oracle": context.scenario.then_oracle,
            "base_polarity": context.scenario.polarity.value,
            "all_valid": row.all_valid,
            "substitutions": substitutions,
        },
        transcript,
    )
    oracle = reply["oracle"]
    if classify_polarity(oracle) is not expected:
        raise NegationFailed(oracle, expected.value)
    return oracle


def _scenario_for_row(context: ScenarioContext, row: TestRow, oracle: str) -> TestScenario:
    filled = fill_template(context.scenario_template, row.assignment)
    base = parse_gherkin(filled)
    lines = [
        f"Feature: {base.feature}",
        f"Given this is the current URL: {base.given_url}",
        f"When {base.when_steps[0]}",
    ]
    lines.extend(f"And {step}" for step in base.when_steps[1:])
    lines.append(f"Then {oracle}")
    return parse_gherkin("\n".join(lines))


def transform(
    context: ScenarioContext,
    kb: KnowledgeBase,
    runtime: AgentRuntime,
    *,
    strength: int = 2,
    seed: int = 0,
    values_per_partition: int = 1,
    suite_id: str = "suite",
) -> Suite:
    """Expand a clarified scenario into a suite of covering test scenarios."""
    if not context.is_effective:
        raise TransformError("context is not effective; clarify the scenario first")
    transcript = Transcript(f"transform-{suite_id}", "transform")
    entry = kb.lookup(context.scenario.feature)
    classes = generate_classes(
        context, entry, runtime, transcript, values_per_partition=values_per_partition
    )
    params = [p.name for p in context.parameter_list]
    index_rows = covering_rows(
        [len(classes[name]) for name in params], strength=strength, seed=seed
    )

    tests: list[GeneratedTest] = []
    dropped: list[dict] = []
    for i, indices in enumerate(index_rows, start=1):
        row = TestRow(
            row_id=f"t{i:03d}",
            classes=tuple(
                classes[name][index] for name, index in zip(params, indices)
            ),
        )
        try:
            oracle = rewrite_oracle(context, row, runtime, transcript)
            scenario = _scenario_for_row(context, row, oracle)
        except NegationFailed as exc:
            dropped.append({"row_id": row.row_id, "reason": str(exc)})
            continue
        tests.append(GeneratedTest(test_id=row.row_id, scenario=scenario, row=row))
    if not tests:
        raise EmptyOutput()
    return Suite(
        suite_id=suite_id,
        context=context,
        tests=tests,
        dropped=dropped,
        transcript=transcript,
        strength=strength,
        seed=seed,
    )


def write_suite(suite: Suite, out_dir: str | Path) -> Path:
    """Write one .feature file per test plus a suite.json manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest_tests = []
    for test in suite.tests:
        filename = f"{test.test_id}.feature"
        (out / filename).write_text(serialize(test.scenario) + "\n", encoding="utf-8")
        manifest_tests.append(
            {
                "test_id": test.test_id,
                "file": filename,
                "all_valid": test.row.all_valid,
                "polarity": test.scenario.polarity.value,
                "oracle": test.scenario.then_oracle,
                "classes": [c.to_dict() for c in test.row.classes],
            }
        )
    manifest = {
        "suite_id": suite.suite_id,
        "strength": suite.strength,
        "seed": suite.seed,
        "context": suite.context.to_dict(),
        "tests": manifest_tests,
        "dropped": suite.dropped,
        "stats": {
            "tests": len(suite.tests),
            "dropped": len(suite.dropped),
            "transform_tokens": suite.transcript.total_tokens,
            "transform_interactions": suite.transcript.interaction_count,
            "transform_elapsed": suite.transcript.elapsed,
        },
    }
    (out / "suite.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return out


@dataclass(frozen=True)
class LoadedTest:
    test_id: str
    scenario: TestScenario
    all_valid: bool
    classes: tuple[dict, ...]
    file: str


@dataclass(frozen=True)
class LoadedSuite:
    suite_id: str
    manifest: dict
    tests: tuple[LoadedTest, ...]
    context: ScenarioContext | None = None


def load_suite(suite_dir: str | Path) -> LoadedSuite:
    """Read a suite directory back: manifest plus re-parsed feature files."""
    suite_path = Path(suite_dir)
    manifest_path = suite_path / "suite.json"
    if not manifest_path.is_file():
        raise TransformError(f"no suite.json in {suite_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    tests = []
    for entry in manifest.get("tests", []):
        feature_path = suite_path / entry["file"]
        if not feature_path.is_file():
            raise TransformError(f"suite file missing: {feature_path}")
        scenario = parse_gherkin(feature_path.read_text(encoding="utf-8"))
        tests.append(
            LoadedTest(
                test_id=entry["test_id"],
                scenario=scenario,
                all_valid=bool(entry["all_valid"]),
                classes=tuple(entry.get("classes", [])),
                file=entry["file"],
            )
        )
    context = None
    if "context" in manifest:
        context = ScenarioContext.from_dict(manifest["context"])
    return LoadedSuite(
        suite_id=manifest.get("suite_id", suite_path.name),
        manifest=manifest,
        tests=tuple(tests),
        context=context,
    )

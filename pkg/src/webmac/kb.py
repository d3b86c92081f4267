"""Equivalence-class knowledge base: partitions per scenario keyword.

A knowledge base maps scenario keywords to parameters, and parameters to
valid/invalid partitions. A partition describes a subset of the input
space ("Including numbers"); its hints are concrete example values. The
package ships one for the bundled fixture app.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from webmac.errors import DuplicateKeyword, NotFound, SchemaError
from webmac.matching import jaccard, match_field, tokenize

__all__ = [
    "Partition",
    "ParameterPartitions",
    "KbEntry",
    "KnowledgeBase",
    "fixture_kb_path",
    "KEYWORD_MATCH_THRESHOLD",
]

KEYWORD_MATCH_THRESHOLD = 0.34

VALID = "valid"
INVALID = "invalid"


@dataclass(frozen=True)
class Partition:
    """One equivalence-class partition of a parameter's input space."""

    description: str
    hints: tuple[str, ...]
    validity: str  # "valid" | "invalid"

    @property
    def is_valid(self) -> bool:
        return self.validity == VALID


@dataclass(frozen=True)
class ParameterPartitions:
    name: str
    valid: tuple[Partition, ...]
    invalid: tuple[Partition, ...]

    @property
    def all(self) -> tuple[Partition, ...]:
        return self.valid + self.invalid


@dataclass(frozen=True)
class KbEntry:
    scenario_keyword: str
    parameters: tuple[ParameterPartitions, ...]

    def partitions_for(self, parameter_name: str) -> ParameterPartitions | None:
        """Partitions for a scenario parameter, matched by field name."""
        names = [p.name for p in self.parameters]
        matched = match_field(parameter_name, names)
        if matched is None:
            return None
        return next(p for p in self.parameters if p.name == matched)


def _schema_error(path: str, detail: str) -> SchemaError:
    return SchemaError(path, detail)


def _parse_partitions(raw, validity: str, where: str, path: str) -> tuple[Partition, ...]:
    if not isinstance(raw, list):
        raise _schema_error(path, f"{where}.{validity} must be a list")
    partitions = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise _schema_error(path, f"{where}.{validity}[{i}] must be an object")
        description = item.get("description")
        if not isinstance(description, str) or not description.strip():
            raise _schema_error(
                path, f"{where}.{validity}[{i}].description must be a non-empty string"
            )
        hints = item.get("hints", [])
        if not isinstance(hints, list) or not all(isinstance(h, str) for h in hints):
            raise _schema_error(
                path, f"{where}.{validity}[{i}].hints must be a list of strings"
            )
        partitions.append(
            Partition(description=description, hints=tuple(hints), validity=validity)
        )
    return tuple(partitions)


@dataclass(frozen=True)
class KnowledgeBase:
    entries: tuple[KbEntry, ...]

    @classmethod
    def from_dict(cls, data, path: str = "<memory>") -> "KnowledgeBase":
        if not isinstance(data, dict) or not isinstance(data.get("entries"), list):
            raise _schema_error(path, "top level must be an object with an entries list")
        entries: list[KbEntry] = []
        seen: set[str] = set()
        for i, raw_entry in enumerate(data["entries"]):
            where = f"entries[{i}]"
            if not isinstance(raw_entry, dict):
                raise _schema_error(path, f"{where} must be an object")
            keyword = raw_entry.get("scenario_keyword")
            if not isinstance(keyword, str) or not keyword.strip():
                raise _schema_error(
                    path, f"{where}.scenario_keyword must be a non-empty string"
                )
            if keyword in seen:
                raise DuplicateKeyword(keyword)
            seen.add(keyword)
            raw_params = raw_entry.get("parameters")
            if not isinstance(raw_params, dict):
                raise _schema_error(path, f"{where}.parameters must be an object")
            params = []
            for name, spec in raw_params.items():
                if not isinstance(spec, dict):
                    raise _schema_error(path, f"{where}.parameters[{name!r}] must be an object")
                spot = f"{where}.parameters[{name!r}]"
                params.append(
                    ParameterPartitions(
                        name=name,
                        valid=_parse_partitions(spec.get("valid", []), VALID, spot, path),
                        invalid=_parse_partitions(spec.get("invalid", []), INVALID, spot, path),
                    )
                )
            entries.append(KbEntry(scenario_keyword=keyword, parameters=tuple(params)))
        return cls(entries=tuple(entries))

    @classmethod
    def load(cls, path: str | Path) -> "KnowledgeBase":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise _schema_error(str(path), f"cannot read file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise _schema_error(str(path), f"not valid JSON: {exc}") from exc
        return cls.from_dict(data, path=str(path))

    def lookup(self, feature: str) -> KbEntry:
        """Entry whose keyword best overlaps the feature text.

        Exact keyword match short-circuits; otherwise the highest token
        overlap at or above the threshold wins, ties broken by keyword
        order. Raises NotFound below the threshold.
        """
        for entry in self.entries:
            if entry.scenario_keyword == feature:
                return entry
        feature_tokens = tokenize(feature)
        best: tuple[float, str, KbEntry] | None = None
        for entry in self.entries:
            score = jaccard(feature_tokens, tokenize(entry.scenario_keyword))
            if score < KEYWORD_MATCH_THRESHOLD:
                continue
            key = (score, entry.scenario_keyword)
            if best is None or score > best[0] or (
                score == best[0] and entry.scenario_keyword < best[1]
            ):
                best = (score, entry.scenario_keyword, entry)
        if best is None:
            raise NotFound(feature)
        return best[2]


def fixture_kb_path() -> Path:
    """Path of the knowledge base shipped for the fixture app."""
    return Path(str(resources.files("webmac").joinpath("data/fixture_kb.json")))

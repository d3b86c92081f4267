"""Gherkin test scenarios: parsing, rendering, parameters, and templates.

The dialect is deliberately small: Feature/Given/When/Then plus And
continuations. Feature is the scenario overview, Given names the target
URL, When steps carry the test input (with quoted parameter values), and
Then is the test oracle.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence
from urllib.parse import urlsplit

from webmac.errors import (
    DuplicateValueAmbiguity,
    MalformedUrl,
    MissingKeyword,
    ScenarioError,
    UnlabeledValue,
    UnsupportedKeyword,
)

__all__ = [
    "Polarity",
    "TestScenario",
    "Parameter",
    "ScenarioContext",
    "parse_gherkin",
    "serialize",
    "extract_parameters",
    "make_template",
    "fill_template",
    "classify_polarity",
    "normalize_whitespace",
    "DEFAULT_NEGATION_MARKERS",
]


class Polarity(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


DEFAULT_NEGATION_MARKERS: tuple[str, ...] = (
    "should not",
    "not",
    "fail",
    "failed",
    "rejected",
    "error",
)

# A quoted literal: opening quote not glued to a word (so possessives like
# "user's" are not openings), closing quote not glued to a word.
_QUOTED_RE = re.compile(
    r"""(?<!\w)"(?P<dq>[^"\n]*)"(?!\w)|(?<!\w)'(?P<sq>[^'\n]*)'(?!\w)"""
)

_CLAUSE_RE = re.compile(
    r"(?:(?<=\n)|(?<=;)|\A)[ \t]*"
    r"(?:(?P<rejected>Scenario Outline|Scenario|Background|Examples)\s*:"
    r"|(?P<feature>Feature)\s*:"
    r"|(?P<step>Given|When|Then|And)\b)"
)

_URL_RE = re.compile(r"https?://[^\s;'\"<>]+")

_STOPWORDS = frozenset(
    """a an the of for with to in on at by from as into onto over under
    and or but then than is are was were be been being am
    i you he she it we they
    this that these those my your his her its our their""".split()
)


def normalize_whitespace(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


def _normalize_outside_quotes(text: str) -> str:
    """Collapse whitespace runs, but keep quoted values byte for byte."""
    parts: list[str] = []
    cursor = 0
    for start, end in _quoted_spans(text):
        parts.append(re.sub(r"\s+", " ", text[cursor:start]))
        parts.append(text[start:end])
        cursor = end
    parts.append(re.sub(r"\s+", " ", text[cursor:]))
    return "".join(parts).strip()


def _normalize_quotes(text: str) -> str:
    """Fold typographic backtick quoting (``x'' and `x') into plain quotes."""
    text = re.sub(r"``(.*?)''", r"'\1'", text, flags=re.DOTALL)
    text = re.sub(r"`([^`'\n]*)'", r"'\1'", text)
    text = text.replace("‘", "'").replace("’", "'")
    text = text.replace("“", '"').replace("”", '"')
    return text


@dataclass(frozen=True)
class TestScenario:
    """A parsed four-clause scenario."""

    feature: str
    given_url: str
    when_steps: tuple[str, ...]
    then_oracle: str
    polarity: Polarity
    # Source text; provenance only, excluded from equality.
    raw: str = field(compare=False, default="")

    def __post_init__(self) -> None:
        split = urlsplit(self.given_url)
        if split.scheme not in ("http", "https") or not split.netloc:
            raise MalformedUrl(self.given_url)
        if not self.when_steps:
            raise ScenarioError("scenario has no When step")
        if not self.then_oracle.strip():
            raise ScenarioError("scenario has an empty Then oracle")


@dataclass(frozen=True)
class Parameter:
    """One quoted input value and the field label it was written under."""

    name: str
    value: str

    @property
    def placeholder(self) -> str:
        return "{" + self.name + "}"

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "placeholder": self.placeholder}


@dataclass(frozen=True)
class ScenarioContext:
    """Summary record handed from clarification to transformation."""

    scenario: TestScenario
    parameter_list: tuple[Parameter, ...]
    is_effective: bool
    scenario_template: str
    transcript_ref: str = ""

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.raw,
            "parameter_list": [p.to_dict() for p in self.parameter_list],
            "is_effective": self.is_effective,
            "scenario_template": self.scenario_template,
            "transcript_ref": self.transcript_ref,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ScenarioContext":
        scenario = parse_gherkin(data["scenario"])
        params = tuple(
            Parameter(name=p["name"], value=p["value"]) for p in data["parameter_list"]
        )
        return cls(
            scenario=scenario,
            parameter_list=params,
            is_effective=bool(data["is_effective"]),
            scenario_template=data["scenario_template"],
            transcript_ref=data.get("transcript_ref", ""),
        )


@dataclass(frozen=True)
class _Clause:
    keyword: str  # effective keyword after folding And
    text: str
    start: int  # span of the clause text within the normalized source
    end: int


def _quoted_spans(text: str) -> list[tuple[int, int]]:
    return [m.span() for m in _QUOTED_RE.finditer(text)]


def _split_clauses(text: str) -> list[_Clause]:
    """Split source text into keyword-led clauses.

    Clause markers are recognized at the start of a line or after a
    semicolon, but never inside a quoted literal. And clauses inherit the
    keyword of the clause before them.
    """
    quoted = _quoted_spans(text)

    def in_quotes(pos: int) -> bool:
        return any(start < pos < end for start, end in quoted)

    markers: list[tuple[str, int, int]] = []  # (keyword, match start, text start)
    for m in _CLAUSE_RE.finditer(text):
        if in_quotes(m.start()):
            continue
        if m.group("rejected"):
            raise UnsupportedKeyword(m.group("rejected"))
        keyword = m.group("feature") or m.group("step")
        markers.append((keyword, m.start(), m.end()))

    if not markers:
        raise MissingKeyword("Feature")
    head = text[: markers[0][1]]
    if head.strip():
        raise ScenarioError(f"unrecognized text before the first keyword: {head.strip()!r}")

    clauses: list[_Clause] = []
    previous_keyword: str | None = None
    for i, (keyword, _, text_start) in enumerate(markers):
        text_end = markers[i + 1][1] if i + 1 < len(markers) else len(text)
        start, end = text_start, text_end
        while start < end and text[start] in " \t":
            start += 1
        if start < end and text[start] == ":":  # tolerate "When: x" styling
            start += 1
        while start < end and text[start] in " \t\r\n":
            start += 1
        while end > start and text[end - 1] in " \t\r\n;":
            end -= 1
        if keyword == "And":
            if previous_keyword is None:
                raise ScenarioError("And clause without a preceding keyword")
            keyword = previous_keyword
        else:
            previous_keyword = keyword
        if start < end:
            clauses.append(_Clause(keyword=keyword, text=text[start:end], start=start, end=end))
    return clauses


def classify_polarity(then_oracle: str, lexicon: Iterable[str] | None = None) -> Polarity:
    """Negative iff the oracle contains a negation/failure marker."""
    if not then_oracle.strip():
        raise ScenarioError("cannot classify an empty oracle")
    markers = tuple(lexicon) if lexicon is not None else DEFAULT_NEGATION_MARKERS
    for marker in markers:
        if re.search(r"\b" + re.escape(marker) + r"\b", then_oracle, re.IGNORECASE):
            return Polarity.NEGATIVE
    return Polarity.POSITIVE


def _extract_url(given_text: str) -> str:
    m = _URL_RE.search(given_text)
    if not m:
        raise MalformedUrl(given_text)
    url = m.group(0).rstrip(".,)")
    split = urlsplit(url)
    if split.scheme not in ("http", "https") or not split.netloc:
        raise MalformedUrl(given_text)
    return url


def parse_gherkin(text: str, lexicon: Iterable[str] | None = None) -> TestScenario:
    """Parse scenario source into a TestScenario.

    Accepts newline- or semicolon-separated clauses. Backtick typography
    is folded into plain single quotes before anything else, and the
    normalized text is what the scenario keeps as its source.
    """
    if not text or not text.strip():
        raise MissingKeyword("Feature")
    normalized = _normalize_quotes(text)
    clauses = _split_clauses(normalized)

    feature_parts: list[str] = []
    given_parts: list[str] = []
    when_steps: list[str] = []
    then_parts: list[str] = []
    for clause in clauses:
        body = _normalize_outside_quotes(clause.text)
        if clause.keyword == "Feature":
            feature_parts.append(body)
        elif clause.keyword == "Given":
            given_parts.append(body)
        elif clause.keyword == "When":
            when_steps.append(body)
        elif clause.keyword == "Then":
            then_parts.append(body)

    for keyword, parts in (
        ("Feature", feature_parts),
        ("Given", given_parts),
        ("When", when_steps),
        ("Then", then_parts),
    ):
        if not parts:
            raise MissingKeyword(keyword)

    url = _extract_url(" ".join(given_parts))
    oracle = " and ".join(then_parts)
    return TestScenario(
        feature=" ".join(feature_parts),
        given_url=url,
        when_steps=tuple(when_steps),
        then_oracle=oracle,
        polarity=classify_polarity(oracle, lexicon),
        raw=normalized,
    )


def serialize(scenario: TestScenario) -> str:
    """Render a scenario as a canonical multi-line Gherkin block.

    The output re-parses to a scenario equal to the input field by field.
    """
    lines = [
        f"Feature: {scenario.feature}",
        f"Given this is the current URL: {scenario.given_url}",
        f"When {scenario.when_steps[0]}",
    ]
    lines.extend(f"And {step}" for step in scenario.when_steps[1:])
    lines.append(f"Then {scenario.then_oracle}")
    return "\n".join(lines)


def _label_for_literal(step_text: str, literal_start: int) -> str:
    """Field label from up to three non-stopword words before the quote."""
    before = step_text[:literal_start]
    tokens = before.split()
    words: list[str] = []
    for token in reversed(tokens):
        if "'" in token or '"' in token:
            break
        cleaned = re.sub(r"^\W+|\W+$", "", token)
        if not cleaned:
            break
        if cleaned.lower() in _STOPWORDS:
            break
        words.append(cleaned)
        if len(words) == 3:
            break
    words.reverse()
    return " ".join(words)


def _snake_case(label: str) -> str:
    parts = re.findall(r"[A-Za-z0-9]+", label)
    return "_".join(p.lower() for p in parts)


def extract_parameters(scenario: TestScenario) -> list[Parameter]:
    """One Parameter per quoted literal in the When steps, in textual order."""
    params: list[Parameter] = []
    used_names: set[str] = set()
    position = 0
    for step in scenario.when_steps:
        for m in _QUOTED_RE.finditer(step):
            value = m.group("dq") if m.group("dq") is not None else m.group("sq")
            label = _label_for_literal(step, m.start())
            name = _snake_case(label)
            if not name:
                raise UnlabeledValue(position, value)
            if name in used_names:
                suffix = 2
                while f"{name}_{suffix}" in used_names:
                    suffix += 1
                name = f"{name}_{suffix}"
            used_names.add(name)
            params.append(Parameter(name=name, value=value))
            position += 1
    return params


def make_template(scenario: TestScenario, params: Sequence[Parameter]) -> str:
    """Replace each quoted When-step value with its placeholder, positionally.

    Substituting the parameter values back reproduces the scenario source
    up to whitespace normalization.
    """
    source = scenario.raw or serialize(scenario)
    clauses = _split_clauses(source)
    replacements: list[tuple[int, int, str]] = []  # (start, end, placeholder)
    index = 0
    for clause in clauses:
        if clause.keyword != "When":
            continue
        region = source[clause.start : clause.end]
        for m in _QUOTED_RE.finditer(region):
            if index >= len(params):
                raise DuplicateValueAmbiguity(m.group("dq") or m.group("sq") or "")
            value = m.group("dq") if m.group("dq") is not None else m.group("sq")
            param = params[index]
            if param.value != value:
                raise ScenarioError(
                    f"parameter list does not align with scenario text: "
                    f"expected {param.value!r} at literal {index}, found {value!r}"
                )
            group = "dq" if m.group("dq") is not None else "sq"
            start, end = m.span(group)
            replacements.append((clause.start + start, clause.start + end, param.placeholder))
            index += 1
    if index != len(params):
        raise ScenarioError(
            f"parameter list has {len(params)} entries but the text has {index} quoted values"
        )

    out: list[str] = []
    cursor = 0
    for start, end, placeholder in replacements:
        out.append(source[cursor:start])
        out.append(placeholder)
        cursor = end
    out.append(source[cursor:])
    return "".join(out)


_PLACEHOLDER_RE = re.compile(r"(?P<quote>[\"'])\{(?P<qname>[A-Za-z0-9_]+)\}(?P=quote)|\{(?P<bare>[A-Za-z0-9_]+)\}")


def template_placeholders(template: str) -> list[str]:
    """Placeholder names appearing in a template, in order, deduplicated."""
    seen: list[str] = []
    for m in _PLACEHOLDER_RE.finditer(template):
        name = m.group("qname") or m.group("bare")
        if name not in seen:
            seen.append(name)
    return seen


def fill_template(template: str, values: Mapping[str, str]) -> str:
    """Substitute placeholder values, switching quote style when needed.

    A value containing the surrounding quote character is emitted with the
    other quote character so the result still parses. Values containing
    both quote characters are rejected.
    """

    def replace(m: re.Match) -> str:
        name = m.group("qname") or m.group("bare")
        if name not in values:
            raise KeyError(f"no value for placeholder {{{name}}}")
        value = values[name]
        quote = m.group("quote")
        if quote is None:
            return value
        if quote in value:
            other = '"' if quote == "'" else "'"
            if other in value:
                raise ValueError(
                    f"value for {{{name}}} contains both quote characters: {value!r}"
                )
            quote = other
        return f"{quote}{value}{quote}"

    return _PLACEHOLDER_RE.sub(replace, template)

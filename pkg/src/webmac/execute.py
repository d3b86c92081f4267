"""Run one generated scenario against the web system under test.

The executor maps scenario parameters onto page controls, asks the coder
for an action script and outcome markers, replays the script through a
backend (plain HTTP or a WebDriver browser), and asks the analyst to
settle and narrate the outcome. Exactly four provider calls per tested
scenario; the replay itself is a local turn.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass
from typing import Protocol, Sequence
from urllib.parse import urljoin

import requests

from webmac.clarify import field_name
from webmac.errors import (
    ExecutionError,
    LocatorNotFound,
    NoSubmitControl,
    TransportError,
    UnmappedParameter,
)
from webmac.matching import match_field
from webmac.probe import (
    ElementType,
    PageElement,
    _parse_attrs,
    filter_interactive,
    is_fillable,
    page_text,
)
from webmac.runtime import AgentRuntime, Role, Transcript
from webmac.scenario import Parameter, Polarity, TestScenario, serialize
from webmac.webdriver import WebDriverClient

__all__ = [
    "EXCERPT_CHARS",
    "TestReport",
    "ExecutionOutcome",
    "Backend",
    "DirectHttpBackend",
    "BrowserBackend",
    "build_locator",
    "parse_locator",
    "resolve_locator",
    "map_parameters",
    "find_submit",
    "validate_script",
    "classify_markers",
    "submit_form",
    "expected_outcome",
    "run_test",
]

EXCERPT_CHARS = 1000

_FORM_RE = re.compile(r"<form\b([^>]*)>", re.IGNORECASE)
_WAIT_POLLS = 20
_WAIT_INTERVAL = 0.1


@dataclass(frozen=True)
class TestReport:
    """Outcome of one scenario run, ready to serialize."""

    test_id: str
    feature: str
    scenario_text: str
    expected: str  # "accepted" | "rejected"
    outcome: str  # "accepted" | "rejected" | "indeterminate"
    is_pass: bool
    error_detected: bool
    narrative: str
    detail: str  # failure detail when the run could not finish
    page_excerpt: str
    transcript_id: str
    backend: str
    elapsed: float

    @classmethod
    def build(
        cls,
        *,
        test_id: str,
        feature: str,
        scenario_text: str,
        expected: str,
        outcome: str,
        narrative: str = "",
        detail: str = "",
        page_excerpt: str = "",
        transcript_id: str = "",
        backend: str = "",
        elapsed: float = 0.0,
    ) -> "TestReport":
        is_pass = outcome == expected
        # an indeterminate run proves nothing either way
        error_detected = not is_pass and outcome != "indeterminate"
        return cls(
            test_id=test_id,
            feature=feature,
            scenario_text=scenario_text,
            expected=expected,
            outcome=outcome,
            is_pass=is_pass,
            error_detected=error_detected,
            narrative=narrative,
            detail=detail,
            page_excerpt=page_excerpt,
            transcript_id=transcript_id,
            backend=backend,
            elapsed=elapsed,
        )

    def to_dict(self) -> dict:
        return {
            "test_id": self.test_id,
            "feature": self.feature,
            "scenario_text": self.scenario_text,
            "expected": self.expected,
            "outcome": self.outcome,
            "is_pass": self.is_pass,
            "error_detected": self.error_detected,
            "narrative": self.narrative,
            "detail": self.detail,
            "page_excerpt": self.page_excerpt,
            "transcript_id": self.transcript_id,
            "backend": self.backend,
            "elapsed": self.elapsed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TestReport":
        return cls(**{key: data[key] for key in cls.__dataclass_fields__})


@dataclass(frozen=True)
class ExecutionOutcome:
    """Where a script replay ended up."""

    final_url: str
    html: str
    text: str


class Backend(Protocol):
    name: str
    timeout: float

    def execute(self, actions: Sequence[dict]) -> ExecutionOutcome: ...


def build_locator(element: PageElement) -> str:
    if element.name:
        return f"name:{element.name}"
    if element.dom_id:
        return f"id:{element.dom_id}"
    if element.label:
        return f"label:{element.label}"
    raise ExecutionError("element has no name, id, or label to locate it by")


def parse_locator(locator: str) -> tuple[str, str]:
    kind, sep, needle = locator.partition(":")
    if not sep or kind not in ("name", "id", "label") or not needle:
        raise ExecutionError(f"malformed locator {locator!r}")
    return kind, needle


def resolve_locator(
    elements: Sequence[PageElement], locator: str, action_index: int = 0
) -> PageElement:
    kind, needle = parse_locator(locator)
    for element in elements:
        if kind == "name" and element.name == needle:
            return element
        if kind == "id" and element.dom_id == needle:
            return element
        if kind == "label" and element.label == needle:
            return element
    raise LocatorNotFound(action_index, locator)


def map_parameters(
    elements: Sequence[PageElement], parameters: Sequence[Parameter]
) -> dict[str, str]:
    """Parameter name to locator, via fuzzy field-name matching."""
    fillable = {field_name(e): e for e in elements if is_fillable(e)}
    candidates = list(fillable)
    mapping: dict[str, str] = {}
    for param in parameters:
        matched = match_field(param.name, candidates)
        if matched is None:
            raise UnmappedParameter(param.name)
        mapping[param.name] = build_locator(fillable[matched])
    return mapping


def find_submit(elements: Sequence[PageElement], url: str = "") -> str:
    for element in elements:
        if element.control_type == "submit" and element.tag in (
            ElementType.BUTTON,
            ElementType.INPUT,
        ):
            return build_locator(element)
    for element in elements:
        if element.tag is ElementType.BUTTON:
            return build_locator(element)
    raise NoSubmitControl(url)


def validate_script(
    actions: Sequence[dict],
    url: str,
    parameters: Sequence[Parameter],
    mapping: dict[str, str],
    submit_locator: str,
) -> None:
    """Reject scripts that drift from the scenario they were asked to run."""
    if not actions or actions[0].get("action") != "navigate" or actions[0].get("url") != url:
        raise ExecutionError("script must start by navigating to the scenario url")
    fills = {
        action["locator"]: action["value"]
        for action in actions
        if action.get("action") in ("fill", "select")
    }
    for param in parameters:
        locator = mapping[param.name]
        if locator not in fills:
            raise UnmappedParameter(param.name)
        if fills[locator] != param.value:  # byte-for-byte, no trimming
            raise ExecutionError(
                f"script altered the value of {param.name!r}: "
                f"{fills[locator]!r} != {param.value!r}"
            )
    if not any(
        action.get("action") == "click" and action.get("locator") == submit_locator
        for action in actions
    ):
        raise ExecutionError("script never clicks the submit control")


def classify_markers(
    text: str, success_markers: Sequence[str], failure_markers: Sequence[str]
) -> str:
    """Case-insensitive substring scan; failure evidence wins."""
    haystack = text.lower()
    failures = [m.lower() for m in failure_markers if m.strip()]
    successes = [m.lower() for m in success_markers if m.strip()]
    if any(marker in haystack for marker in failures):
        return "rejected"
    if any(marker in haystack for marker in successes):
        return "accepted"
    return "indeterminate"


def submit_form(
    html: str,
    base_url: str,
    overrides: dict[str, str],
    http: requests.Session,
    timeout: float = 10.0,
) -> tuple[str, str]:
    """Submit the page's first form the way a browser would.

    Every named control contributes a field: overrides where given,
    otherwise the control's own value (hidden inputs keep theirs, which
    is how csrf tokens survive). Returns (final url, response html).
    """
    match = _FORM_RE.search(html)
    attrs = _parse_attrs(match.group(1)) if match else {}
    target = urljoin(base_url, attrs.get("action") or base_url)
    method = attrs.get("method", "get").lower()
    data: dict[str, str] = {}
    for element in filter_interactive(html):
        if element.tag in (ElementType.BUTTON, ElementType.ANCHOR):
            continue
        if not element.name:
            continue
        if element.tag is ElementType.SELECT:
            default = element.value or (element.options[0] if element.options else "")
        else:
            default = element.value or ""
        data[element.name] = overrides.get(element.name, default)
    if method == "post":
        response = http.post(target, data=data, timeout=timeout)
    else:
        response = http.get(target, params=data, timeout=timeout)
    return response.url, response.text


class DirectHttpBackend:
    """Replay scripts with plain HTTP requests, no browser involved."""

    name = "direct_http"

    def __init__(self, timeout: float = 10.0):
        self.timeout = timeout

    def execute(self, actions: Sequence[dict]) -> ExecutionOutcome:
        http = requests.Session()
        http.max_redirects = 5
        url = ""
        html = ""
        fills: dict[str, str] = {}
        for index, action in enumerate(actions):
            kind = action["action"]
            try:
                if kind == "navigate":
                    response = http.get(action["url"], timeout=self.timeout)
                    url, html = response.url, response.text
                    fills = {}
                elif kind in ("fill", "select"):
                    element = resolve_locator(
                        filter_interactive(html), action["locator"], index
                    )
                    if not element.name:
                        raise ExecutionError(
                            f"control {action['locator']!r} has no form name to post"
                        )
                    fills[element.name] = action["value"]
                elif kind == "click":
                    element = resolve_locator(
                        filter_interactive(html), action["locator"], index
                    )
                    if element.tag is ElementType.ANCHOR:
                        response = http.get(
                            urljoin(url, element.href), timeout=self.timeout
                        )
                        url, html = response.url, response.text
                    else:
                        url, html = submit_form(html, url, fills, http, self.timeout)
                    fills = {}
                # wait_for: responses are synchronous here, nothing to wait on
                # read_text: the final page text is always returned
            except requests.RequestException as exc:
                raise TransportError(index, exc) from exc
        return ExecutionOutcome(final_url=url, html=html, text=page_text(html))


class BrowserBackend:
    """Replay scripts through a WebDriver endpoint."""

    name = "browser"

    def __init__(self, webdriver_url: str, timeout: float = 10.0):
        self.webdriver_url = webdriver_url
        self.timeout = timeout

    def execute(self, actions: Sequence[dict]) -> ExecutionOutcome:
        client = WebDriverClient(self.webdriver_url, timeout=self.timeout)
        try:
            client.start_session()
        except TransportError as exc:
            raise TransportError(0, exc.cause) from exc
        try:
            for index, action in enumerate(actions):
                try:
                    self._apply(client, action)
                except TransportError as exc:
                    raise TransportError(index, exc.cause) from exc
                except LocatorNotFound as exc:
                    raise LocatorNotFound(index, exc.locator) from exc
            html = client.page_source()
            return ExecutionOutcome(
                final_url=client.current_url(), html=html, text=page_text(html)
            )
        finally:
            try:
                client.quit()
            except TransportError:
                pass

    def _apply(self, client: WebDriverClient, action: dict) -> None:
        kind = action["action"]
        if kind == "navigate":
            client.navigate(action["url"])
        elif kind in ("fill", "select"):
            client.send_keys(self._find(client, action["locator"]), action["value"])
        elif kind == "click":
            client.click(self._find(client, action["locator"]))
        elif kind == "wait_for":
            self._wait_for(client, action.get("marker", ""))
        # read_text: page source is read once at the end

    def _wait_for(self, client: WebDriverClient, marker: str) -> None:
        if not marker:
            return
        for _ in range(_WAIT_POLLS):
            if marker.lower() in page_text(client.page_source()).lower():
                return
            time.sleep(_WAIT_INTERVAL)

    def _find(self, client: WebDriverClient, locator: str) -> str:
        kind, needle = parse_locator(locator)
        if kind == "label":
            # css cannot address a label's control; resolve via the source
            element = resolve_locator(filter_interactive(client.page_source()), locator)
            if element.name:
                kind, needle = "name", element.name
            elif element.dom_id:
                kind, needle = "id", element.dom_id
            elif element.tag is ElementType.BUTTON:
                return client.find_element("button")
            else:
                raise LocatorNotFound(-1, locator)
        css = f'[name="{needle}"]' if kind == "name" else f'[id="{needle}"]'
        return client.find_element(css)


def expected_outcome(scenario: TestScenario) -> str:
    return "accepted" if scenario.polarity is Polarity.POSITIVE else "rejected"


def run_test(
    test_id: str,
    scenario: TestScenario,
    parameters: Sequence[Parameter],
    backend: Backend,
    runtime: AgentRuntime,
) -> tuple[TestReport, Transcript]:
    """Map, script, replay, and judge one scenario.

    Finishes with a report in every expected failure mode: transport and
    locator faults, unmappable parameters, and missing submit controls
    all yield an indeterminate report instead of raising. Provider
    faults (schema violations, exhausted scripts) do raise.
    """
    transcript = Transcript(f"test-{test_id}", "test")
    expected = expected_outcome(scenario)
    started = runtime.clock()

    def report(outcome: str, narrative: str = "", detail: str = "", excerpt: str = "") -> TestReport:
        return TestReport.build(
            test_id=test_id,
            feature=scenario.feature,
            scenario_text=serialize(scenario),
            expected=expected,
            outcome=outcome,
            narrative=narrative,
            detail=detail,
            page_excerpt=excerpt,
            transcript_id=transcript.transcript_id,
            backend=backend.name,
            elapsed=runtime.clock() - started,
        )

    try:
        try:
            response = requests.get(scenario.given_url, timeout=backend.timeout)
        except requests.RequestException as exc:
            raise TransportError(0, exc) from exc
        elements = filter_interactive(response.text)
        mapping = map_parameters(elements, parameters)
        submit_locator = find_submit(elements, scenario.given_url)

        coder_parameters = []
        for param in parameters:
            element = resolve_locator(elements, mapping[param.name])
            coder_parameters.append(
                {
                    "name": param.name,
                    "value": param.value,
                    "locator": mapping[param.name],
                    "control": element.tag.value,
                }
            )
        script_reply = runtime.invoke(
            Role.CODER,
            {
                "kind": "script",
                "url": scenario.given_url,
                "parameters": coder_parameters,
                "submit_locator": submit_locator,
            },
            transcript,
        )
        actions = script_reply["actions"]
        validate_script(actions, scenario.given_url, parameters, mapping, submit_locator)
        markers = runtime.invoke(
            Role.CODER,
            {
                "kind": "markers",
                "oracle": scenario.then_oracle,
                "polarity": scenario.polarity.value,
            },
            transcript,
        )

        try:
            state = backend.execute(actions)
        except (TransportError, LocatorNotFound) as exc:
            runtime.record_local(
                Role.EXECUTOR,
                {"backend": backend.name, "actions": len(actions)},
                {"performed": 0, "transport_error": str(exc)},
                transcript,
            )
            return report("indeterminate", detail=str(exc)), transcript
        runtime.record_local(
            Role.EXECUTOR,
            {"backend": backend.name, "actions": len(actions)},
            {"performed": len(actions), "transport_error": None},
            transcript,
        )

        excerpt = state.text[:EXCERPT_CHARS]
        marker_outcome = classify_markers(
            state.text, markers["success_markers"], markers["failure_markers"]
        )
        arbitration = runtime.invoke(
            Role.ANALYST,
            {
                "marker_outcome": marker_outcome,
                "page_excerpt": excerpt,
                "oracle": scenario.then_oracle,
                "polarity": scenario.polarity.value,
            },
            transcript,
        )
        outcome = arbitration["outcome"]
        narrative = runtime.invoke(
            Role.ANALYST,
            {
                "kind": "narrative",
                "outcome": outcome,
                "scenario": serialize(scenario),
                "page_excerpt": excerpt,
            },
            transcript,
        )
        return (
            report(outcome, narrative=narrative["test_information"], excerpt=excerpt),
            transcript,
        )
    except ExecutionError as exc:
        return report("indeterminate", detail=str(exc)), transcript

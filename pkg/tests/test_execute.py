"""Tests for script replay backends and scenario execution."""

from __future__ import annotations

import pytest
import requests

from webdriver_stub import StubWebDriverServer
from webmac.errors import (
    ExecutionError,
    LocatorNotFound,
    NoSubmitControl,
    TransportError,
    UnmappedParameter,
)
from webmac.execute import (
    BrowserBackend,
    DirectHttpBackend,
    TestReport as Report,
    build_locator,
    classify_markers,
    expected_outcome,
    find_submit,
    map_parameters,
    parse_locator,
    resolve_locator,
    run_test,
    submit_form,
    validate_script,
)
from webmac.fixture import FixtureServer
from webmac.probe import ElementType, PageElement, filter_interactive
from webmac.rules import RuleProvider
from webmac.runtime import AgentRuntime, Role
from webmac.scenario import extract_parameters, parse_gherkin
from webmac.webdriver import WebDriverClient

DEFAULTS = {
    "first name": "Tom",
    "last name": "Smith",
    "address": "412 Main Street",
    "city": "NewYork",
    "telephone": "6095916230",
}


def build_scenario(url, negative=False, **overrides):
    values = dict(DEFAULTS)
    for key, value in overrides.items():
        values[key.replace("_", " ")] = value
    when = (
        f"I add a person with first name '{values['first name']}' and "
        f"last name '{values['last name']}' as a new pet owner with the "
        f"address '{values['address']}' and the city '{values['city']}' "
        f"and the telephone '{values['telephone']}'"
    )
    then = (
        f"the owner named '{values['first name']} {values['last name']}' "
        f"should{' not' if negative else ''} be created"
    )
    return parse_gherkin(
        f"Feature: Add Owner\n"
        f"Given this is the current URL: {url}\n"
        f"When {when}\n"
        f"Then {then}"
    )


def happy_script(url):
    return [
        {"action": "navigate", "url": url},
        {"action": "fill", "locator": "name:first_name", "value": "Tom"},
        {"action": "fill", "locator": "name:last_name", "value": "Smith"},
        {"action": "fill", "locator": "name:address", "value": "412 Main Street"},
        {"action": "fill", "locator": "name:city", "value": "NewYork"},
        {"action": "fill", "locator": "name:telephone", "value": "6095916230"},
        {"action": "click", "locator": "label:Add Owner"},
        {"action": "read_text"},
    ]


@pytest.fixture(scope="module")
def fixture_server():
    server = FixtureServer().start()
    yield server
    server.stop()


@pytest.fixture(scope="module")
def stub_server():
    server = StubWebDriverServer().start()
    yield server
    server.stop()


@pytest.fixture(scope="module")
def form_html(fixture_server):
    return requests.get(fixture_server.form_url, timeout=5.0).text


class TestLocators:
    def test_parse_locator(self):
        assert parse_locator("name:first_name") == ("name", "first_name")
        assert parse_locator("label:Add Owner") == ("label", "Add Owner")

    @pytest.mark.parametrize("bad", ["xpath://div", "name", "name:", ":x"])
    def test_parse_locator_rejects(self, bad):
        with pytest.raises(ExecutionError):
            parse_locator(bad)

    def test_build_locator_prefers_name(self):
        element = PageElement(
            tag=ElementType.INPUT, name="city", dom_id="cty", label="City"
        )
        assert build_locator(element) == "name:city"

    def test_build_locator_falls_back(self):
        assert build_locator(PageElement(tag=ElementType.INPUT, dom_id="c")) == "id:c"
        assert build_locator(PageElement(tag=ElementType.BUTTON, label="Go")) == "label:Go"

    def test_resolve_locator(self, form_html):
        elements = filter_interactive(form_html)
        assert resolve_locator(elements, "name:city").name == "city"
        with pytest.raises(LocatorNotFound) as excinfo:
            resolve_locator(elements, "name:owner_age", action_index=3)
        assert excinfo.value.action_index == 3
        assert excinfo.value.locator == "name:owner_age"


class TestMapping:
    def test_maps_all_parameters(self, fixture_server, form_html):
        scenario = build_scenario(fixture_server.form_url)
        params = extract_parameters(scenario)
        mapping = map_parameters(filter_interactive(form_html), params)
        assert mapping == {
            "first_name": "name:first_name",
            "last_name": "name:last_name",
            "address": "name:address",
            "city": "name:city",
            "telephone": "name:telephone",
        }

    def test_unknown_parameter(self, form_html):
        from webmac.scenario import Parameter

        with pytest.raises(UnmappedParameter):
            map_parameters(
                filter_interactive(form_html),
                [Parameter(name="favorite_color", value="blue")],
            )

    def test_find_submit(self, form_html):
        assert find_submit(filter_interactive(form_html)) == "label:Add Owner"

    def test_find_submit_missing(self):
        with pytest.raises(NoSubmitControl):
            find_submit(
                filter_interactive("<p>prose</p><a href='/x' id='x'>link</a>"),
                "http://x.test/",
            )


class TestClassifyMarkers:
    def test_failure_wins(self):
        text = "The owner added successfully. Previous error cleared."
        assert classify_markers(text, ["added"], ["error"]) == "rejected"

    def test_case_insensitive(self):
        assert classify_markers("OWNER ADDED", ["added"], []) == "accepted"

    def test_blank_markers_ignored(self):
        assert classify_markers("anything", ["", "  "], ["", " "]) == "indeterminate"

    def test_no_signal(self):
        assert classify_markers("plain prose", ["added"], ["error"]) == "indeterminate"


class TestValidateScript:
    URL = "http://x.test/owners/new"
    MAPPING = {"first_name": "name:first_name"}

    def params(self, value="Tom"):
        from webmac.scenario import Parameter

        return [Parameter(name="first_name", value=value)]

    def script(self, value="Tom"):
        return [
            {"action": "navigate", "url": self.URL},
            {"action": "fill", "locator": "name:first_name", "value": value},
            {"action": "click", "locator": "label:Add Owner"},
            {"action": "read_text"},
        ]

    def test_good_script(self):
        validate_script(
            self.script(), self.URL, self.params(), self.MAPPING, "label:Add Owner"
        )

    def test_must_navigate_first(self):
        with pytest.raises(ExecutionError):
            validate_script(
                self.script()[1:], self.URL, self.params(), self.MAPPING,
                "label:Add Owner",
            )

    def test_wrong_url(self):
        script = self.script()
        script[0] = {"action": "navigate", "url": "http://other.test/"}
        with pytest.raises(ExecutionError):
            validate_script(
                script, self.URL, self.params(), self.MAPPING, "label:Add Owner"
            )

    def test_missing_fill(self):
        script = [self.script()[0], self.script()[2]]
        with pytest.raises(UnmappedParameter):
            validate_script(
                script, self.URL, self.params(), self.MAPPING, "label:Add Owner"
            )

    def test_value_drift(self):
        with pytest.raises(ExecutionError):
            validate_script(
                self.script("Tom "), self.URL, self.params("Tom"), self.MAPPING,
                "label:Add Owner",
            )

    def test_missing_submit_click(self):
        script = [self.script()[0], self.script()[1]]
        with pytest.raises(ExecutionError):
            validate_script(
                script, self.URL, self.params(), self.MAPPING, "label:Add Owner"
            )


class TestReportBuild:
    @pytest.mark.parametrize(
        "expected,outcome,is_pass,error_detected",
        [
            ("accepted", "accepted", True, False),
            ("rejected", "rejected", True, False),
            ("accepted", "rejected", False, True),
            ("rejected", "accepted", False, True),
            ("accepted", "indeterminate", False, False),
            ("rejected", "indeterminate", False, False),
        ],
    )
    def test_truth_table(self, expected, outcome, is_pass, error_detected):
        report = Report.build(
            test_id="t001", feature="Add Owner", scenario_text="...",
            expected=expected, outcome=outcome,
        )
        assert report.is_pass is is_pass
        assert report.error_detected is error_detected

    def test_round_trip(self):
        report = Report.build(
            test_id="t001", feature="Add Owner", scenario_text="...",
            expected="accepted", outcome="rejected", narrative="n", detail="d",
            page_excerpt="p", transcript_id="test-t001", backend="direct_http",
            elapsed=1.5,
        )
        assert Report.from_dict(report.to_dict()) == report

    def test_expected_outcome(self, fixture_server):
        positive = build_scenario(fixture_server.form_url)
        negative = build_scenario(fixture_server.form_url, negative=True)
        assert expected_outcome(positive) == "accepted"
        assert expected_outcome(negative) == "rejected"


class TestSubmitForm:
    def test_valid_submission(self, fixture_server, form_html):
        http = requests.Session()
        url, html = submit_form(
            form_html,
            fixture_server.form_url,
            {
                "first_name": "Tom", "last_name": "Smith",
                "address": "412 Main Street", "city": "NewYork",
                "telephone": "6095916230",
            },
            http,
        )
        assert "added successfully" in html
        assert "412 Main Street" in html

    def test_hidden_csrf_carried_along(self, fixture_server, form_html):
        # no override for _csrf, yet the submission is not rejected as forged
        _, html = submit_form(
            form_html, fixture_server.form_url, {"first_name": "Tom"},
            requests.Session(),
        )
        assert "token is invalid" not in html

    def test_invalid_submission(self, fixture_server, form_html):
        _, html = submit_form(
            form_html, fixture_server.form_url,
            {"first_name": "John12", "last_name": "Smith",
             "address": "412 Main Street", "city": "NewYork",
             "telephone": "6095916230"},
            requests.Session(),
        )
        assert "was not saved" in html
        assert "must not contain numbers" in html

    def test_value_bytes_survive(self, fixture_server, form_html):
        _, html = submit_form(
            form_html, fixture_server.form_url,
            {"first_name": "Tom", "last_name": "Smith",
             "address": "412  Main   Street", "city": "NewYork",
             "telephone": "6095916230"},
            requests.Session(),
        )
        assert "412  Main   Street" in html


class TestDirectHttpBackend:
    def test_happy_path(self, fixture_server):
        backend = DirectHttpBackend()
        state = backend.execute(happy_script(fixture_server.form_url))
        assert "added successfully" in state.text
        assert state.final_url.startswith(fixture_server.base_url)
        assert "<h2>Owner Created</h2>" in state.html

    def test_anchor_click_navigates(self, fixture_server):
        state = DirectHttpBackend().execute([
            {"action": "navigate", "url": fixture_server.base_url},
            {"action": "click", "locator": "label:Register an owner"},
        ])
        assert "Add Owner" in state.text

    def test_unknown_locator(self, fixture_server):
        script = happy_script(fixture_server.form_url)
        script[1] = {"action": "fill", "locator": "name:ghost", "value": "x"}
        with pytest.raises(LocatorNotFound) as excinfo:
            DirectHttpBackend().execute(script)
        assert excinfo.value.action_index == 1

    def test_dead_server(self):
        with pytest.raises(TransportError) as excinfo:
            DirectHttpBackend(timeout=2.0).execute(
                [{"action": "navigate", "url": "http://127.0.0.1:9/owners/new"}]
            )
        assert excinfo.value.action_index == 0


class TestWebDriverClient:
    def test_manual_session(self, fixture_server, stub_server):
        client = WebDriverClient(stub_server.base_url)
        client.start_session()
        try:
            client.navigate(fixture_server.form_url)
            assert client.current_url() == fixture_server.form_url
            field = client.find_element('[name="first_name"]')
            client.send_keys(field, "Tom")
            assert "first_name" in client.page_source()
        finally:
            client.quit()
        assert client.session_id is None

    def test_missing_element(self, fixture_server, stub_server):
        client = WebDriverClient(stub_server.base_url)
        client.start_session()
        try:
            client.navigate(fixture_server.form_url)
            with pytest.raises(LocatorNotFound):
                client.find_element('[name="ghost"]')
        finally:
            client.quit()

    def test_unreachable_endpoint(self):
        client = WebDriverClient("http://127.0.0.1:9", timeout=2.0)
        with pytest.raises(TransportError):
            client.start_session()


class TestBrowserBackend:
    def test_happy_path(self, fixture_server, stub_server):
        backend = BrowserBackend(stub_server.base_url)
        state = backend.execute(happy_script(fixture_server.form_url))
        assert "added successfully" in state.text

    def test_unknown_locator(self, fixture_server, stub_server):
        script = happy_script(fixture_server.form_url)
        script[2] = {"action": "fill", "locator": "name:ghost", "value": "x"}
        with pytest.raises(LocatorNotFound) as excinfo:
            BrowserBackend(stub_server.base_url).execute(script)
        assert excinfo.value.action_index == 2

    def test_agrees_with_direct_http(self, fixture_server, stub_server):
        script = happy_script(fixture_server.form_url)
        direct = DirectHttpBackend().execute(script)
        browser = BrowserBackend(stub_server.base_url).execute(script)
        for markers in (["added"], ["error"]):
            assert classify_markers(direct.text, markers, []) == classify_markers(
                browser.text, markers, []
            )


class FailingBackend:
    name = "direct_http"
    timeout = 5.0

    def execute(self, actions):
        raise TransportError(1, "socket closed mid-flight")


class TestRunTest:
    def run(self, fixture_server, scenario, backend=None):
        params = extract_parameters(scenario)
        runtime = AgentRuntime(RuleProvider())
        return run_test(
            "t001", scenario, params, backend or DirectHttpBackend(), runtime
        )

    def test_valid_scenario_accepted(self, fixture_server):
        scenario = build_scenario(fixture_server.form_url)
        report, transcript = self.run(fixture_server, scenario)
        assert report.outcome == "accepted"
        assert report.is_pass
        assert not report.error_detected
        assert report.backend == "direct_http"
        assert "success" in report.narrative
        assert transcript.tag == "test"
        assert transcript.interaction_count == 4
        roles = [turn.role for turn in transcript.turns]
        assert roles == [Role.CODER, Role.CODER, Role.EXECUTOR, Role.ANALYST, Role.ANALYST]
        executor_turn = transcript.turns[2]
        assert executor_turn.round_trips == 0
        assert executor_turn.prompt_tokens == 0

    def test_invalid_scenario_rejected(self, fixture_server):
        scenario = build_scenario(
            fixture_server.form_url, negative=True, telephone="123"
        )
        report, transcript = self.run(fixture_server, scenario)
        assert report.outcome == "rejected"
        assert report.is_pass
        assert not report.error_detected
        assert transcript.interaction_count == 4

    def test_seeded_bug_detected(self):
        bugged = FixtureServer(bugs={"name-special-chars"}).start()
        try:
            scenario = build_scenario(
                bugged.form_url, negative=True, first_name="John@"
            )
            report, _ = self.run(bugged, scenario)
        finally:
            bugged.stop()
        assert report.expected == "rejected"
        assert report.outcome == "accepted"
        assert not report.is_pass
        assert report.error_detected

    def test_same_input_rejected_without_bug(self, fixture_server):
        scenario = build_scenario(
            fixture_server.form_url, negative=True, first_name="John@"
        )
        report, _ = self.run(fixture_server, scenario)
        assert report.outcome == "rejected"
        assert report.is_pass
        assert not report.error_detected

    def test_browser_backend_agrees(self, fixture_server, stub_server):
        scenario = build_scenario(fixture_server.form_url)
        direct_report, _ = self.run(fixture_server, scenario)
        browser_report, _ = self.run(
            fixture_server, scenario, BrowserBackend(stub_server.base_url)
        )
        assert browser_report.outcome == direct_report.outcome
        assert browser_report.is_pass == direct_report.is_pass
        assert browser_report.backend == "browser"

    def test_unreachable_target_is_indeterminate(self):
        scenario = build_scenario("http://127.0.0.1:9/owners/new")
        params = extract_parameters(scenario)
        report, transcript = run_test(
            "t001", scenario, params, DirectHttpBackend(timeout=2.0),
            AgentRuntime(RuleProvider()),
        )
        assert report.outcome == "indeterminate"
        assert not report.error_detected
        assert report.detail
        assert transcript.interaction_count == 0

    def test_transport_failure_after_scripting(self, fixture_server):
        scenario = build_scenario(fixture_server.form_url)
        report, transcript = self.run(fixture_server, scenario, FailingBackend())
        assert report.outcome == "indeterminate"
        assert not report.error_detected
        assert "socket closed" in report.detail
        # coder was consulted twice, then transport died: no analyst calls
        assert transcript.interaction_count == 2
        roles = [turn.role for turn in transcript.turns]
        assert roles == [Role.CODER, Role.CODER, Role.EXECUTOR]

    def test_unmappable_parameter_is_indeterminate(self, fixture_server):
        text = (
            f"Feature: Add Owner\n"
            f"Given this is the current URL: {fixture_server.form_url}\n"
            f"When I add a person with first name 'Tom' and the favorite color 'blue'\n"
            f"Then the owner named 'Tom' should be created"
        )
        scenario = parse_gherkin(text)
        params = extract_parameters(scenario)
        report, transcript = run_test(
            "t001", scenario, params, DirectHttpBackend(), AgentRuntime(RuleProvider())
        )
        assert report.outcome == "indeterminate"
        assert "favorite_color" in report.detail
        assert transcript.interaction_count == 0

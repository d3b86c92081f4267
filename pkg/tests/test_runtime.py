"""Tests for the agent runtime, providers, and the rule-based synthesizer."""

from __future__ import annotations

import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from webmac.errors import ProviderUnavailable, SchemaViolation, ScriptExhausted
from webmac.rules import RuleProvider
from webmac.runtime import (
    AgentRuntime,
    HttpProvider,
    MockProvider,
    Role,
    Transcript,
    estimate_tokens,
)
from webmac.scenario import Polarity, classify_polarity, extract_parameters, parse_gherkin


def make_runtime(scripts, **kwargs):
    return AgentRuntime(MockProvider(scripts), **kwargs)


class CountingClock:
    def __init__(self):
        self.now = 0.0

    def __call__(self):
        self.now += 1.0
        return self.now


class TestMockProvider:
    def test_replies_in_order_per_role(self):
        runtime = make_runtime({
            Role.REWRITER: [{"scenario": "first"}, {"scenario": "second"}],
        })
        t = Transcript("t1", "clarify")
        assert runtime.invoke(Role.REWRITER, {}, t)["scenario"] == "first"
        assert runtime.invoke(Role.REWRITER, {}, t)["scenario"] == "second"

    def test_exhausted_script(self):
        runtime = make_runtime({Role.REWRITER: []})
        with pytest.raises(ScriptExhausted):
            runtime.invoke(Role.REWRITER, {}, Transcript("t1", "clarify"))

    def test_token_accounting(self):
        provider = MockProvider({Role.SUMMARIZER: [{"summary": "ok"}]})
        runtime = AgentRuntime(provider)
        t = Transcript("t1", "clarify")
        reply = runtime.invoke(Role.SUMMARIZER, {"url": "http://x.test/"}, t)
        assert reply == {"summary": "ok"}
        turn = t.turns[0]
        assert turn.completion_tokens == estimate_tokens(json.dumps(reply, sort_keys=True))
        assert turn.prompt_tokens > 0
        assert turn.round_trips == 1
        assert t.total_tokens == turn.prompt_tokens + turn.completion_tokens

    def test_estimate_is_quarter_length(self):
        assert estimate_tokens("abcd" * 5) == 5
        assert estimate_tokens("abc") == math.ceil(3 / 4)
        assert estimate_tokens("") == 0


class TestValidation:
    def test_retry_then_success(self):
        runtime = make_runtime({
            Role.REWRITER: ["not json at all", {"scenario": "fixed"}],
        })
        t = Transcript("t1", "clarify")
        reply = runtime.invoke(Role.REWRITER, {}, t)
        assert reply == {"scenario": "fixed"}
        assert t.turns[0].round_trips == 2
        assert t.interaction_count == 2

    def test_persistent_violation_raises(self):
        runtime = make_runtime({
            Role.REWRITER: [{"wrong": 1}, {"also_wrong": 2}],
        })
        with pytest.raises(SchemaViolation):
            runtime.invoke(Role.REWRITER, {}, Transcript("t1", "clarify"))

    def test_code_fence_stripped(self):
        runtime = make_runtime({
            Role.SUMMARIZER: ['```json\n{"summary": "fenced"}\n```'],
        })
        t = Transcript("t1", "clarify")
        assert runtime.invoke(Role.SUMMARIZER, {}, t)["summary"] == "fenced"

    def test_coder_rejects_unknown_action(self):
        runtime = make_runtime({
            Role.CODER: [
                {"actions": [{"action": "hover", "locator": "name:x"}]},
                {"actions": [{"action": "hover", "locator": "name:x"}]},
            ],
        })
        with pytest.raises(SchemaViolation):
            runtime.invoke(Role.CODER, {}, Transcript("t1", "test"))

    def test_coder_accepts_script_and_markers(self):
        runtime = make_runtime({
            Role.CODER: [
                {"actions": [
                    {"action": "navigate", "url": "http://x.test/"},
                    {"action": "fill", "locator": "name:a", "value": "1"},
                    {"action": "click", "locator": "name:go"},
                    {"action": "read_text"},
                ]},
                {"success_markers": ["success"], "failure_markers": ["error"]},
            ],
        })
        t = Transcript("t1", "test")
        assert "actions" in runtime.invoke(Role.CODER, {}, t)
        assert "success_markers" in runtime.invoke(Role.CODER, {}, t)

    def test_analyst_union_shapes(self):
        runtime = make_runtime({
            Role.ANALYST: [
                {
                    "exitcode": 0,
                    "interaction_elements": ["first_name"],
                    "webpage_information": "a form",
                    "is_clarify": 1,
                },
                {"outcome": "accepted", "test_information": "looked fine"},
                {"outcome": "maybe", "test_information": "?"},
                {"outcome": "maybe", "test_information": "?"},
            ],
        })
        t = Transcript("t1", "test")
        assert runtime.invoke(Role.ANALYST, {}, t)["is_clarify"] == 1
        assert runtime.invoke(Role.ANALYST, {}, t)["outcome"] == "accepted"
        with pytest.raises(SchemaViolation):
            runtime.invoke(Role.ANALYST, {}, t)

    def test_clarifier_duplicate_ids_rejected(self):
        bad = {"questions": [
            {"id": "q1", "text": "a?", "fields": ["x"]},
            {"id": "q1", "text": "b?", "fields": ["y"]},
        ]}
        runtime = make_runtime({Role.CLARIFIER: [bad, bad]})
        with pytest.raises(SchemaViolation):
            runtime.invoke(Role.CLARIFIER, {}, Transcript("t1", "clarify"))


class TestTranscript:
    def test_local_turns_do_not_count_interactions(self):
        runtime = make_runtime({})
        t = Transcript("t1", "test")
        runtime.record_local(Role.EXECUTOR, {"performed": 4}, {"performed": 4, "transport_error": None}, t)
        assert t.interaction_count == 0
        assert t.total_tokens == 0
        assert len(t.turns) == 1

    def test_round_trip_serialization(self):
        runtime = make_runtime({Role.SUMMARIZER: [{"summary": "s"}]},
                               clock=CountingClock())
        t = Transcript("t9", "clarify")
        runtime.invoke(Role.SUMMARIZER, {"k": "v"}, t)
        again = Transcript.from_dict(t.to_dict())
        assert again.transcript_id == "t9"
        assert again.tag == "clarify"
        assert again.turns[0].role is Role.SUMMARIZER
        assert again.to_dict() == t.to_dict()

    def test_injected_clock_makes_elapsed_deterministic(self):
        clock = CountingClock()
        runtime = make_runtime({Role.SUMMARIZER: [{"summary": "s"}]}, clock=clock)
        t = Transcript("t1", "clarify")
        runtime.invoke(Role.SUMMARIZER, {}, t)
        assert t.turns[0].elapsed == 1.0
        assert t.elapsed == 1.0


class _ChatStub(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", "0"))
        self.rfile.read(length)
        body = json.dumps({
            "choices": [{"message": {"content": '{"summary": "from http"}'}}],
            "usage": {"prompt_tokens": 11, "completion_tokens": 7},
        }).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class TestHttpProvider:
    def test_missing_key(self, monkeypatch):
        monkeypatch.delenv("WEBMAC_API_KEY", raising=False)
        with pytest.raises(ProviderUnavailable):
            HttpProvider()

    def test_complete_against_stub(self):
        server = ThreadingHTTPServer(("127.0.0.1", 0), _ChatStub)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            url = f"http://127.0.0.1:{server.server_address[1]}/v1/chat/completions"
            provider = HttpProvider(api_key="k", url=url, model="m")
            runtime = AgentRuntime(provider)
            t = Transcript("t1", "clarify")
            reply = runtime.invoke(Role.SUMMARIZER, {}, t)
            assert reply == {"summary": "from http"}
            assert t.turns[0].prompt_tokens == 11
            assert t.turns[0].completion_tokens == 7
        finally:
            server.shutdown()
            server.server_close()

    def test_http_error_raises(self):
        provider = HttpProvider(api_key="k", url="http://127.0.0.1:9/nope", timeout=1.0)
        with pytest.raises(ProviderUnavailable):
            provider.complete(Role.SUMMARIZER, "s", "u", {})


OWNER_ELEMENTS = [
    {"tag": "input", "name": "first_name", "label": "First Name", "control_type": "text"},
    {"tag": "input", "name": "last_name", "label": "Last Name", "control_type": "text"},
    {"tag": "input", "name": "address", "label": "Address", "control_type": "text"},
    {"tag": "input", "name": "city", "label": "City", "control_type": "text"},
    {"tag": "input", "name": "telephone", "label": "Telephone", "control_type": "text"},
    {"tag": "input", "name": "_csrf", "control_type": "hidden"},
    {"tag": "button", "label": "Add Owner", "control_type": "submit"},
]


class TestRuleProvider:
    def setup_method(self):
        self.runtime = AgentRuntime(RuleProvider())
        self.transcript = Transcript("rules", "clarify")

    def invoke(self, role, payload):
        return self.runtime.invoke(role, payload, self.transcript)

    def test_clarifier_bundles_fields_into_one_question(self):
        reply = self.invoke(Role.CLARIFIER, {
            "scenario": "x",
            "missing_fields": ["address", "city", "telephone"],
        })
        (question,) = reply["questions"]
        assert question["text"] == (
            "What do you need to add for the user's address, city, and telephone?"
        )
        assert question["fields"] == ["address", "city", "telephone"]

    def test_clarifier_single_field(self):
        reply = self.invoke(Role.CLARIFIER, {"missing_fields": ["first_name"]})
        assert reply["questions"][0]["text"] == (
            "What do you need to add for the user's first name?"
        )

    def test_clarifier_nothing_missing(self):
        assert self.invoke(Role.CLARIFIER, {"missing_fields": []}) == {"questions": []}

    def test_analyst_page_flags_missing_inputs(self):
        reply = self.invoke(Role.ANALYST, {
            "kind": "page",
            "parameters": ["first_name", "last_name"],
            "probe_exit": 0,
            "page": {"title": "Add Owner", "elements": OWNER_ELEMENTS},
        })
        assert reply["is_clarify"] == 1
        assert reply["interaction_elements"] == [
            "first_name", "last_name", "address", "city", "telephone",
        ]

    def test_analyst_page_complete_scenario(self):
        reply = self.invoke(Role.ANALYST, {
            "kind": "page",
            "parameters": ["first_name", "last_name", "address", "city", "telephone"],
            "probe_exit": 0,
            "page": {"title": "Add Owner", "elements": OWNER_ELEMENTS},
        })
        assert reply["is_clarify"] == 0

    def test_analyst_outcome_uses_markers_when_determinate(self):
        reply = self.invoke(Role.ANALYST, {
            "marker_outcome": "rejected",
            "page_excerpt": "The owner added successfully",
        })
        assert reply["outcome"] == "rejected"

    def test_analyst_outcome_arbitrates_when_indeterminate(self):
        reply = self.invoke(Role.ANALYST, {
            "marker_outcome": "indeterminate",
            "page_excerpt": "Something went wrong: error while saving",
        })
        assert reply["outcome"] == "rejected"

    def test_rewriter_merges_answers(self):
        scenario = (
            "Feature: Add Owner; Given this is the current URL: http://localhost:8080/owners/new; "
            "When I add a person with first name 'Tom' and last name 'Smith' as a new pet owner; "
            "Then the owner named 'Tom Smith' should be created"
        )
        answer = (
            "The address is 412 Main Street, the city is NewYork, "
            "and the telephone is 6095916230."
        )
        reply = self.invoke(Role.REWRITER, {
            "scenario": scenario,
            "questions": [{
                "id": "q1",
                "text": "What do you need to add for the user's address, city, and telephone?",
                "fields": ["address", "city", "telephone"],
            }],
            "answers": {"q1": answer},
        })
        rewritten = parse_gherkin(reply["scenario"])
        params = {p.name: p.value for p in extract_parameters(rewritten)}
        assert params == {
            "first_name": "Tom",
            "last_name": "Smith",
            "address": "412 Main Street",
            "city": "NewYork",
            "telephone": "6095916230",
        }

    def test_rewriter_keeps_scenario_when_answers_are_useless(self):
        reply = self.invoke(Role.REWRITER, {
            "scenario": "Feature: F; Given http://x.test/; When I click 'Go'; Then done ok",
            "questions": [{"id": "q1", "text": "?", "fields": ["address"]}],
            "answers": {"q1": "I do not know"},
        })
        assert reply["scenario"].startswith("Feature: F")

    def test_coder_script_preserves_value_bytes(self):
        value = "412  Main   Street"
        reply = self.invoke(Role.CODER, {
            "kind": "script",
            "url": "http://x.test/form",
            "parameters": [{"name": "address", "value": value, "locator": "name:address"}],
            "submit_locator": "label:Add Owner",
        })
        fills = [a for a in reply["actions"] if a["action"] == "fill"]
        assert fills[0]["value"] == value
        kinds = [a["action"] for a in reply["actions"]]
        assert kinds == ["navigate", "fill", "click", "read_text"]

    def test_coder_default_markers(self):
        reply = self.invoke(Role.CODER, {"kind": "markers", "oracle": "x", "polarity": "positive"})
        assert reply["success_markers"] == ["success", "added"]
        assert reply["failure_markers"] == ["error", "invalid", "must not be", "required"]

    def test_eq_class_uses_hints(self):
        reply = self.invoke(Role.EQ_CLASS_GENERATOR, {
            "parameter": "first_name",
            "description": "Including numbers",
            "hints": ["John12"],
            "validity": "invalid",
            "count": 1,
        })
        assert reply["values"] == ["John12"]

    def test_eq_class_boundary_takes_more_hints(self):
        reply = self.invoke(Role.EQ_CLASS_GENERATOR, {
            "parameter": "first_name",
            "description": "For characters 1 to 50, try boundary values",
            "hints": ["A", "B" * 50, "C" * 25, "D"],
            "validity": "valid",
            "count": 1,
        })
        assert len(reply["values"]) == 3

    def test_eq_class_null_value(self):
        reply = self.invoke(Role.EQ_CLASS_GENERATOR, {
            "parameter": "address",
            "description": "null value",
            "hints": [],
            "validity": "invalid",
            "count": 1,
        })
        assert reply["values"] == [""]

    def test_oracle_substitution_and_negation(self):
        reply = self.invoke(Role.ORACLE_GENERATOR, {
            "oracle": "the owner named 'Tom Smith' should be created",
            "base_polarity": "positive",
            "all_valid": False,
            "substitutions": [
                {"old": "Tom", "new": "John12"},
                {"old": "Smith", "new": "Smith"},
            ],
        })
        assert reply["oracle"] == "the owner named 'John12 Smith' should not be created"
        assert classify_polarity(reply["oracle"]) is Polarity.NEGATIVE

    def test_oracle_unchanged_when_polarity_matches(self):
        reply = self.invoke(Role.ORACLE_GENERATOR, {
            "oracle": "the owner should be created",
            "base_polarity": "positive",
            "all_valid": True,
            "substitutions": [],
        })
        assert reply["oracle"] == "the owner should be created"

    def test_oracle_affirmation(self):
        reply = self.invoke(Role.ORACLE_GENERATOR, {
            "oracle": "register failed",
            "base_polarity": "negative",
            "all_valid": True,
            "substitutions": [],
        })
        assert classify_polarity(reply["oracle"]) is Polarity.POSITIVE

    def test_all_rule_replies_pass_validation(self):
        # every reply above went through invoke, so schema validation ran
        assert all(t.round_trips == 1 for t in self.transcript.turns)

"""Prompt templates for each agent role.

Each role gets a system prompt describing its job and the exact JSON
shape it must reply with. User prompts are the canonical JSON encoding of
the payload, so identical payloads always produce identical prompts.
"""

from __future__ import annotations

import json

__all__ = ["system_prompt", "user_prompt"]

_SYSTEM_PROMPTS = {
    "coder": (
        "You write web test scripts. Given a target URL, parameter values, and "
        "the interactive elements of the page, reply with JSON in one of two "
        "shapes. For a script request: {\"actions\": [{\"action\": ..., ...}]} "
        "using only the actions navigate (url), fill (locator, value), select "
        "(locator, value), click (locator), wait_for (marker), read_text. Fill "
        "values must be copied exactly, byte for byte. For a marker request: "
        "{\"success_markers\": [...], \"failure_markers\": [...]} listing page "
        "text fragments that signal the oracle holding or failing."
    ),
    "executor": (
        "You run web test scripts and report what happened. Reply with JSON: "
        "{\"performed\": <actions completed>, \"transport_error\": <string or null>}."
    ),
    "analyst": (
        "You analyze web testing state. Reply with JSON in one of two shapes. "
        "For a page analysis: {\"exitcode\": <probe exit code>, "
        "\"interaction_elements\": [<fillable field names>], "
        "\"webpage_information\": <one-paragraph page description>, "
        "\"is_clarify\": 1 if the scenario is missing inputs the page needs, else 0}. "
        "For a result analysis: {\"outcome\": \"accepted\"|\"rejected\"|\"indeterminate\", "
        "\"test_information\": <one-paragraph account of what the run showed>}."
    ),
    "clarifier": (
        "You ask a human tester for the inputs a scenario is missing. Reply "
        "with JSON: {\"questions\": [{\"id\": <short id>, \"text\": <one "
        "question>, \"fields\": [<field names it covers>]}]}. Ask as few "
        "questions as possible; bundle related fields into one question."
    ),
    "rewriter": (
        "You rewrite test scenarios to include newly clarified inputs. Keep "
        "the Feature, Given, and Then clauses; extend the When step with the "
        "answered values as quoted literals after field labels. Reply with "
        "JSON: {\"scenario\": <the full rewritten scenario text>}."
    ),
    "summarizer": (
        "You summarize a clarified scenario for the tester. Reply with JSON: "
        "{\"summary\": <a short paragraph covering the target page, the "
        "parameters, and whether the scenario is ready for test generation>}."
    ),
    "eq_class_generator": (
        "You produce concrete test values for one equivalence-class partition "
        "of one parameter. Honor the partition description and its hints; "
        "values must not contain newlines, braces, or both quote characters. "
        "Reply with JSON: {\"values\": [<strings>]}."
    ),
    "oracle_generator": (
        "You rewrite a test oracle for a derived test row. Substitute the row "
        "values for the original ones where the oracle mentions them, and "
        "negate or un-negate the expectation so it matches whether the row's "
        "inputs are all valid. Reply with JSON: {\"oracle\": <the rewritten "
        "Then text>}."
    ),
}

_USER_INSTRUCTIONS = {
    "coder": "Produce the reply for this request:",
    "executor": "Report on this execution:",
    "analyst": "Analyze this:",
    "clarifier": "The scenario is missing the listed fields. Write the questions:",
    "rewriter": "Merge the answers into the scenario:",
    "summarizer": "Summarize this clarified scenario:",
    "eq_class_generator": "Generate values for this partition:",
    "oracle_generator": "Rewrite this oracle:",
}


def system_prompt(role: str) -> str:
    return _SYSTEM_PROMPTS[role]


def user_prompt(role: str, payload: dict) -> str:
    body = json.dumps(payload, sort_keys=True, ensure_ascii=False)
    return f"{_USER_INSTRUCTIONS[role]}\n{body}"

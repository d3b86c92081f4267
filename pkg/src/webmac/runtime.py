"""Agent runtime: roles, transcripts, token accounting, and providers.

Every model exchange goes through AgentRuntime.invoke, which renders the
role's prompt, calls the configured chat-completion provider, validates
the reply against the role's output shape, and records one turn in the
transcript. Local work (like actually driving the browser) is recorded
with record_local so transcripts stay complete without counting fake
round trips.
"""

from __future__ import annotations

import json
import math
import os
import re
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple, Protocol

import requests

from webmac.errors import ProviderUnavailable, SchemaViolation, ScriptExhausted
from webmac.prompts import system_prompt, user_prompt

__all__ = [
    "Role",
    "AgentTurn",
    "Transcript",
    "AgentRuntime",
    "Provider",
    "ProviderReply",
    "MockProvider",
    "HttpProvider",
    "ACTION_VOCABULARY",
    "estimate_tokens",
]

ACTION_VOCABULARY = ("navigate", "fill", "select", "click", "wait_for", "read_text")

OUTCOMES = ("accepted", "rejected", "indeterminate")


class Role(str, Enum):
    CODER = "coder"
    EXECUTOR = "executor"
    ANALYST = "analyst"
    CLARIFIER = "clarifier"
    REWRITER = "rewriter"
    SUMMARIZER = "summarizer"
    EQ_CLASS_GENERATOR = "eq_class_generator"
    ORACLE_GENERATOR = "oracle_generator"


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


@dataclass
class AgentTurn:
    """One recorded exchange: payload in, validated reply out."""

    role: Role
    request: dict
    reply: dict
    prompt_tokens: int = 0
    completion_tokens: int = 0
    round_trips: int = 1
    elapsed: float = 0.0

    def to_dict(self) -> dict:
        return {
            "role": self.role.value,
            "request": self.request,
            "reply": self.reply,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "round_trips": self.round_trips,
            "elapsed": self.elapsed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AgentTurn":
        return cls(
            role=Role(data["role"]),
            request=data["request"],
            reply=data["reply"],
            prompt_tokens=data["prompt_tokens"],
            completion_tokens=data["completion_tokens"],
            round_trips=data["round_trips"],
            elapsed=data["elapsed"],
        )


@dataclass
class Transcript:
    """All turns of one phase (clarify, transform, or test) for one unit."""

    transcript_id: str
    tag: str  # "clarify" | "transform" | "test"
    turns: list[AgentTurn] = field(default_factory=list)

    def add(self, turn: AgentTurn) -> None:
        self.turns.append(turn)

    @property
    def interaction_count(self) -> int:
        return sum(t.round_trips for t in self.turns)

    @property
    def prompt_tokens(self) -> int:
        return sum(t.prompt_tokens for t in self.turns)

    @property
    def completion_tokens(self) -> int:
        return sum(t.completion_tokens for t in self.turns)

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    @property
    def elapsed(self) -> float:
        return sum(t.elapsed for t in self.turns)

    def to_dict(self) -> dict:
        return {
            "transcript_id": self.transcript_id,
            "tag": self.tag,
            "turns": [t.to_dict() for t in self.turns],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Transcript":
        return cls(
            transcript_id=data["transcript_id"],
            tag=data["tag"],
            turns=[AgentTurn.from_dict(t) for t in data["turns"]],
        )


class ProviderReply(NamedTuple):
    text: str
    prompt_tokens: int
    completion_tokens: int


class Provider(Protocol):
    def complete(self, role: Role, system: str, user: str, payload: dict) -> ProviderReply:
        ...


def _require_str_list(data: dict, key: str) -> list[str]:
    value = data.get(key)
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ValueError(f"{key} must be a list of strings")
    return value


def _validate_coder(data: dict) -> None:
    if "actions" in data:
        actions = data["actions"]
        if not isinstance(actions, list) or not actions:
            raise ValueError("actions must be a non-empty list")
        for i, action in enumerate(actions):
            if not isinstance(action, dict):
                raise ValueError(f"action {i} is not an object")
            kind = action.get("action")
            if kind not in ACTION_VOCABULARY:
                raise ValueError(f"action {i} uses unknown action {kind!r}")
            if kind == "navigate" and not isinstance(action.get("url"), str):
                raise ValueError(f"action {i}: navigate needs a url")
            if kind in ("fill", "select"):
                if not isinstance(action.get("locator"), str) or not isinstance(
                    action.get("value"), str
                ):
                    raise ValueError(f"action {i}: {kind} needs locator and value")
            if kind == "click" and not isinstance(action.get("locator"), str):
                raise ValueError(f"action {i}: click needs a locator")
            if kind == "wait_for" and not isinstance(action.get("marker"), str):
                raise ValueError(f"action {i}: wait_for needs a marker")
    elif "success_markers" in data or "failure_markers" in data:
        _require_str_list(data, "success_markers")
        _require_str_list(data, "failure_markers")
    else:
        raise ValueError("coder reply needs actions or markers")


def _validate_analyst(data: dict) -> None:
    if "is_clarify" in data:
        if not isinstance(data.get("exitcode"), int):
            raise ValueError("exitcode must be an integer")
        _require_str_list(data, "interaction_elements")
        if not isinstance(data.get("webpage_information"), str):
            raise ValueError("webpage_information must be a string")
        if data["is_clarify"] not in (0, 1):
            raise ValueError("is_clarify must be 0 or 1")
    elif "outcome" in data:
        if data["outcome"] not in OUTCOMES:
            raise ValueError(f"outcome must be one of {OUTCOMES}")
        if not isinstance(data.get("test_information"), str):
            raise ValueError("test_information must be a string")
    else:
        raise ValueError("analyst reply needs is_clarify or outcome")


def _validate_clarifier(data: dict) -> None:
    questions = data.get("questions")
    if not isinstance(questions, list):
        raise ValueError("questions must be a list")
    seen: set[str] = set()
    for i, q in enumerate(questions):
        if not isinstance(q, dict):
            raise ValueError(f"question {i} is not an object")
        if not isinstance(q.get("id"), str) or not q["id"]:
            raise ValueError(f"question {i} needs a non-empty id")
        if q["id"] in seen:
            raise ValueError(f"question id {q['id']!r} repeats")
        seen.add(q["id"])
        if not isinstance(q.get("text"), str) or not q["text"].strip():
            raise ValueError(f"question {i} needs text")
        _require_str_list(q, "fields")


def _validate_rewriter(data: dict) -> None:
    if not isinstance(data.get("scenario"), str) or not data["scenario"].strip():
        raise ValueError("scenario must be a non-empty string")


def _validate_summarizer(data: dict) -> None:
    if not isinstance(data.get("summary"), str):
        raise ValueError("summary must be a string")


def _validate_eq_class(data: dict) -> None:
    _require_str_list(data, "values")


def _validate_oracle(data: dict) -> None:
    if not isinstance(data.get("oracle"), str) or not data["oracle"].strip():
        raise ValueError("oracle must be a non-empty string")


def _validate_executor(data: dict) -> None:
    if not isinstance(data.get("performed"), int):
        raise ValueError("performed must be an integer")
    if "transport_error" in data and not isinstance(data["transport_error"], (str, type(None))):
        raise ValueError("transport_error must be a string or null")


_VALIDATORS: dict[Role, Callable[[dict], None]] = {
    Role.CODER: _validate_coder,
    Role.EXECUTOR: _validate_executor,
    Role.ANALYST: _validate_analyst,
    Role.CLARIFIER: _validate_clarifier,
    Role.REWRITER: _validate_rewriter,
    Role.SUMMARIZER: _validate_summarizer,
    Role.EQ_CLASS_GENERATOR: _validate_eq_class,
    Role.ORACLE_GENERATOR: _validate_oracle,
}

_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n(.*)\n```$", re.DOTALL)


def _parse_reply(text: str) -> dict:
    stripped = text.strip()
    fence = _FENCE_RE.match(stripped)
    if fence:
        stripped = fence.group(1).strip()
    data = json.loads(stripped)
    if not isinstance(data, dict):
        raise ValueError("reply must be a JSON object")
    return data


class AgentRuntime:
    """Invokes agents through a provider and records every turn."""

    def __init__(
        self,
        provider: Provider,
        *,
        clock: Callable[[], float] | None = None,
        schema_retries: int = 1,
    ):
        self.provider = provider
        self.clock = clock or time.monotonic
        self.schema_retries = schema_retries

    def invoke(self, role: Role, payload: dict, transcript: Transcript) -> dict:
        """One agent call: prompt, complete, validate, record.

        A reply that fails validation is retried once with a reformat
        note; a second failure raises SchemaViolation.
        """
        system = system_prompt(role.value)
        user = user_prompt(role.value, payload)
        prompt_tokens = 0
        completion_tokens = 0
        attempts = 0
        last_raw = ""
        started = self.clock()
        while attempts <= self.schema_retries:
            attempts += 1
            text, p_tokens, c_tokens = self.provider.complete(role, system, user, payload)
            prompt_tokens += p_tokens
            completion_tokens += c_tokens
            try:
                reply = _parse_reply(text)
                _VALIDATORS[role](reply)
            except (ValueError, json.JSONDecodeError):
                last_raw = text
                user = (
                    user
                    + "\nThe previous reply did not match the required JSON shape. "
                    "Reply again with only the JSON object."
                )
                continue
            transcript.add(
                AgentTurn(
                    role=role,
                    request=payload,
                    reply=reply,
                    prompt_tokens=prompt_tokens,
                    completion_tokens=completion_tokens,
                    round_trips=attempts,
                    elapsed=self.clock() - started,
                )
            )
            return reply
        raise SchemaViolation(role.value, last_raw)

    def record_local(
        self,
        role: Role,
        payload: dict,
        reply: dict,
        transcript: Transcript,
        *,
        elapsed: float = 0.0,
    ) -> dict:
        """Record work done locally; no provider call, no round trips."""
        transcript.add(
            AgentTurn(
                role=role,
                request=payload,
                reply=reply,
                prompt_tokens=0,
                completion_tokens=0,
                round_trips=0,
                elapsed=elapsed,
            )
        )
        return reply


class MockProvider:
    """Scripted provider for tests: fixed replies per role, in order."""

    def __init__(self, scripts: dict):
        self._scripts: dict[Role, list[dict]] = {}
        for role, replies in scripts.items():
            key = role if isinstance(role, Role) else Role(role)
            self._scripts[key] = list(replies)

    def complete(self, role: Role, system: str, user: str, payload: dict) -> ProviderReply:
        queue = self._scripts.get(role)
        if not queue:
            raise ScriptExhausted(role.value)
        reply = queue.pop(0)
        text = reply if isinstance(reply, str) else json.dumps(reply, sort_keys=True)
        return ProviderReply(
            text=text,
            prompt_tokens=estimate_tokens(system + user),
            completion_tokens=estimate_tokens(text),
        )

    def remaining(self, role: Role) -> int:
        return len(self._scripts.get(role, []))


class HttpProvider:
    """Chat-completion provider speaking the common JSON HTTP dialect."""

    def __init__(
        self,
        api_key: str | None = None,
        url: str | None = None,
        model: str | None = None,
        temperature: float = 0.0,
        timeout: float = 60.0,
    ):
        self.api_key = api_key or os.environ.get("WEBMAC_API_KEY", "")
        if not self.api_key:
            raise ProviderUnavailable("WEBMAC_API_KEY is not set")
        self.url = url or os.environ.get(
            "WEBMAC_API_URL", "https://api.openai.com/v1/chat/completions"
        )
        self.model = model or os.environ.get("WEBMAC_MODEL", "gpt-4o-mini")
        self.temperature = temperature
        self.timeout = timeout

    def complete(self, role: Role, system: str, user: str, payload: dict) -> ProviderReply:
        body = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
        try:
            resp = requests.post(
                self.url,
                json=body,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ProviderUnavailable(str(exc)) from exc
        if resp.status_code != 200:
            raise ProviderUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
        data = resp.json()
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderUnavailable(f"malformed completion response: {exc}") from exc
        usage = data.get("usage", {})
        return ProviderReply(
            text=text,
            prompt_tokens=usage.get("prompt_tokens", estimate_tokens(system + user)),
            completion_tokens=usage.get("completion_tokens", estimate_tokens(text)),
        )

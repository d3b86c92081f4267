"""A deterministic, rule-based provider.

It answers every agent role with fixed heuristics computed from the
request payload, so whole pipeline runs are reproducible without any
model endpoint. Tests and offline runs use it; live runs swap in a real
chat-completion provider without touching the callers.
"""

from __future__ import annotations

import json
import re

from webmac.matching import match_field
from webmac.runtime import ProviderReply, Role, estimate_tokens
from webmac.scenario import Polarity, classify_polarity, parse_gherkin, serialize

__all__ = ["RuleProvider"]

_UNFILLABLE = ("hidden", "submit", "button", "reset", "image", "file", "link")

DEFAULT_SUCCESS_MARKERS = ("success", "added")
DEFAULT_FAILURE_MARKERS = ("error", "invalid", "must not be", "required")

_ANSWER_RE = re.compile(
    r"the ([a-z][a-z ]*?) is ([^,.]+?)(?=,|\.| and |$)", re.IGNORECASE
)


def _human(field: str) -> str:
    return field.replace("_", " ")


def _join_fields(fields: list[str]) -> str:
    human = [_human(f) for f in fields]
    if len(human) == 1:
        return human[0]
    if len(human) == 2:
        return f"{human[0]} and {human[1]}"
    return ", ".join(human[:-1]) + f", and {human[-1]}"


def _field_name(element: dict) -> str:
    if element.get("name"):
        return element["name"]
    if element.get("label"):
        return re.sub(r"[^a-z0-9]+", "_", element["label"].lower()).strip("_")
    return element.get("dom_id", "")


def _fillable_names(elements: list[dict]) -> list[str]:
    names = []
    for element in elements:
        if element.get("tag") in ("anchor", "button"):
            continue
        if element.get("control_type") in _UNFILLABLE:
            continue
        name = _field_name(element)
        if name:
            names.append(name)
    return names


def _strip_quotes(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "'\"":
        return value[1:-1]
    return value


def _quoted(value: str) -> str:
    quote = '"' if "'" in value else "'"
    return f"{quote}{value}{quote}"


_NEGATE_RULES = (
    (re.compile(r"\bshould\b(?! not)"), "should not"),
    (re.compile(r"\bmust\b(?! not)"), "must not"),
    (re.compile(r"\bis\b(?! not)"), "is not"),
    (re.compile(r"\bare\b(?! not)"), "are not"),
    (re.compile(r"\bsucceeded\b"), "failed"),
    (re.compile(r"\bsucceeds\b"), "fails"),
)

_AFFIRM_RULES = (
    (re.compile(r"\bshould not\b"), "should"),
    (re.compile(r"\bmust not\b"), "must"),
    (re.compile(r"\bis not\b"), "is"),
    (re.compile(r"\bare not\b"), "are"),
    (re.compile(r"\bfailed\b"), "succeeded"),
    (re.compile(r"\bfails\b"), "succeeds"),
    (re.compile(r"\bfail\b"), "succeed"),
    (re.compile(r"\berrors\b", re.IGNORECASE), "successes"),
    (re.compile(r"\berror\b", re.IGNORECASE), "success"),
    (re.compile(r"\brejected\b"), "accepted"),
)


def _retarget_oracle(oracle: str, target: Polarity) -> str:
    if not oracle.strip():
        return "the operation should fail" if target is Polarity.NEGATIVE else "the operation succeeds"
    rules = _NEGATE_RULES if target is Polarity.NEGATIVE else _AFFIRM_RULES
    for _ in range(5):
        if classify_polarity(oracle) is target:
            return oracle
        for pattern, replacement in rules:
            rewritten = pattern.sub(replacement, oracle, count=1)
            if rewritten != oracle:
                oracle = rewritten
                break
        else:
            break
    if classify_polarity(oracle) is not target:
        if target is Polarity.NEGATIVE:
            oracle = f"{oracle}, but the operation should fail"
        else:
            oracle = f"the operation succeeds and {oracle}"
    return oracle


class RuleProvider:
    """Deterministic provider: same payload in, same reply out."""

    def complete(self, role: Role, system: str, user: str, payload: dict) -> ProviderReply:
        reply = self._reply(role, payload)
        text = json.dumps(reply, sort_keys=True)
        return ProviderReply(
            text=text,
            prompt_tokens=estimate_tokens(system + user),
            completion_tokens=estimate_tokens(text),
        )

    def _reply(self, role: Role, payload: dict) -> dict:
        if role is Role.CLARIFIER:
            return self._clarifier(payload)
        if role is Role.ANALYST:
            return self._analyst(payload)
        if role is Role.REWRITER:
            return self._rewriter(payload)
        if role is Role.SUMMARIZER:
            return self._summarizer(payload)
        if role is Role.CODER:
            return self._coder(payload)
        if role is Role.EQ_CLASS_GENERATOR:
            return self._eq_class(payload)
        if role is Role.ORACLE_GENERATOR:
            return self._oracle(payload)
        if role is Role.EXECUTOR:
            return {"performed": int(payload.get("performed", 0)), "transport_error": None}
        raise ValueError(f"no rule for role {role}")

    def _clarifier(self, payload: dict) -> dict:
        missing = list(payload.get("missing_fields", []))
        if not missing:
            return {"questions": []}
        text = f"What do you need to add for the user's {_join_fields(missing)}?"
        return {"questions": [{"id": "q1", "text": text, "fields": missing}]}

    def _analyst(self, payload: dict) -> dict:
        if payload.get("kind") == "page":
            page = payload.get("page", {})
            fillable = _fillable_names(page.get("elements", []))
            params = list(payload.get("parameters", []))
            missing = [f for f in fillable if match_field(f, params) is None]
            info = (
                f"The page '{page.get('title', '')}' presents "
                f"{len(fillable)} fillable field(s): {', '.join(fillable) or 'none'}."
            )
            return {
                "exitcode": int(payload.get("probe_exit", 0)),
                "interaction_elements": fillable,
                "webpage_information": info,
                "is_clarify": 1 if missing else 0,
            }
        if payload.get("kind") == "narrative":
            outcome = payload.get("outcome", "indeterminate")
            if outcome == "accepted":
                account = (
                    "After executing the code, the web page reported success and "
                    "conformed to the description of the test scenario."
                )
            elif outcome == "rejected":
                account = (
                    "After executing the code, the web page reported a problem "
                    "and did not accept the submitted values."
                )
            else:
                account = (
                    "After executing the code, the web page gave no clear signal "
                    "either way."
                )
            return {"outcome": outcome, "test_information": account}
        # outcome arbitration
        marker_outcome = payload.get("marker_outcome", "indeterminate")
        if marker_outcome != "indeterminate":
            outcome = marker_outcome
        else:
            excerpt = payload.get("page_excerpt", "").lower()
            if any(m in excerpt for m in ("error", "invalid", "fail")):
                outcome = "rejected"
            elif any(m in excerpt for m in ("success", "added", "created", "thank")):
                outcome = "accepted"
            else:
                outcome = "indeterminate"
        return {
            "outcome": outcome,
            "test_information": f"The page outcome reads as {outcome}.",
        }

    def _rewriter(self, payload: dict) -> dict:
        original = payload.get("scenario", "")
        answers: dict[str, str] = payload.get("answers", {})
        additions: list[tuple[str, str]] = []
        for question in payload.get("questions", []):
            answer = answers.get(question.get("id", ""), "")
            parsed = {
                m.group(1).strip().lower().replace(" ", "_"): _strip_quotes(m.group(2))
                for m in _ANSWER_RE.finditer(answer)
            }
            for field in question.get("fields", []):
                key = field.lower().replace(" ", "_")
                value = parsed.get(key, "")
                if value:
                    additions.append((field, value))
        if not additions:
            return {"scenario": original}
        try:
            scenario = parse_gherkin(original)
        except Exception:
            return {"scenario": original}
        suffix = " and ".join(
            f"the {_human(field)} {_quoted(value)}" for field, value in additions
        )
        steps = list(scenario.when_steps)
        steps[0] = f"{steps[0]} with {suffix}"
        lines = [
            f"Feature: {scenario.feature}",
            f"Given this is the current URL: {scenario.given_url}",
            f"When {steps[0]}",
        ]
        lines.extend(f"And {s}" for s in steps[1:])
        lines.append(f"Then {scenario.then_oracle}")
        return {"scenario": "\n".join(lines)}

    def _summarizer(self, payload: dict) -> dict:
        params = payload.get("parameters", [])
        names = ", ".join(p.get("name", "") for p in params) or "none"
        readiness = (
            "It is ready for test generation."
            if payload.get("is_effective")
            else "It still needs clarification."
        )
        summary = (
            f"The scenario targets {payload.get('url', '')} and fills "
            f"{len(params)} parameter(s): {names}. {readiness}"
        )
        return {"summary": summary}

    def _coder(self, payload: dict) -> dict:
        if payload.get("kind") == "markers":
            return {
                "success_markers": list(DEFAULT_SUCCESS_MARKERS),
                "failure_markers": list(DEFAULT_FAILURE_MARKERS),
            }
        actions: list[dict] = [{"action": "navigate", "url": payload.get("url", "")}]
        for param in payload.get("parameters", []):
            kind = "select" if param.get("control") == "select" else "fill"
            actions.append(
                {
                    "action": kind,
                    "locator": param.get("locator", ""),
                    "value": param.get("value", ""),
                }
            )
        submit = payload.get("submit_locator", "")
        if submit:
            actions.append({"action": "click", "locator": submit})
        actions.append({"action": "read_text"})
        return {"actions": actions}

    def _eq_class(self, payload: dict) -> dict:
        description = payload.get("description", "")
        hints = list(payload.get("hints", []))
        count = int(payload.get("count", 1))
        if "boundary" in description.lower():
            count = max(count, min(3, len(hints)))
        values = [
            v
            for v in hints
            if "\n" not in v and "{" not in v and "}" not in v
            and not ("'" in v and '"' in v)
        ][:count]
        if not values and "null" in description.lower():
            values = [""]
        return {"values": values}

    def _oracle(self, payload: dict) -> dict:
        oracle = payload.get("oracle", "")
        for sub in sorted(
            payload.get("substitutions", []),
            key=lambda s: len(s.get("old", "")),
            reverse=True,
        ):
            old, new = sub.get("old", ""), sub.get("new", "")
            if len(old) >= 2:
                oracle = re.sub(
                    r"(?<!\w)" + re.escape(old) + r"(?!\w)", lambda m: new, oracle
                )
        target = Polarity.POSITIVE if payload.get("all_valid", True) else Polarity.NEGATIVE
        return {"oracle": _retarget_oracle(oracle, target)}

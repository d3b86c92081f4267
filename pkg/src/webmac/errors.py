"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class WebmacError(Exception):
    """Base class for all errors raised by this package."""


# --- scenario parsing / templating ---

class ScenarioError(WebmacError):
    pass


class MissingKeyword(ScenarioError):
    def __init__(self, keyword: str):
        self.keyword = keyword
        super().__init__(f"scenario is missing the {keyword!r} clause")


class UnsupportedKeyword(ScenarioError):
    def __init__(self, keyword: str):
        self.keyword = keyword
        super().__init__(
            f"keyword {keyword!r} is not supported; "
            "only Feature/Given/When/Then/And scenarios are accepted"
        )


class MalformedUrl(ScenarioError):
    def __init__(self, given_text: str):
        self.given_text = given_text
        super().__init__(f"no absolute http(s) URL found in Given clause: {given_text!r}")


class UnlabeledValue(ScenarioError):
    def __init__(self, position: int, value: str):
        self.position = position
        self.value = value
        super().__init__(
            f"quoted value {value!r} at position {position} has no identifiable field label"
        )


class DuplicateValueAmbiguity(ScenarioError):
    def __init__(self, value: str):
        self.value = value
        super().__init__(
            f"two parameters share the literal {value!r} and positions are unknown"
        )


# --- page probing ---

class ProbeError(WebmacError):
    pass


class NetworkError(ProbeError):
    def __init__(self, cause: object):
        self.cause = cause
        super().__init__(f"fetch failed: {cause}")


class NonHtmlResponse(ProbeError):
    def __init__(self, content_type: str):
        self.content_type = content_type
        super().__init__(f"response is not an HTML document: {content_type!r}")


class FetchTimeout(ProbeError):
    def __init__(self, url: str, timeout: float):
        self.url = url
        self.timeout = timeout
        super().__init__(f"fetching {url} exceeded {timeout}s")


# --- agent runtime ---

class AgentError(WebmacError):
    pass


class ProviderUnavailable(AgentError):
    def __init__(self, detail: object):
        self.detail = detail
        super().__init__(f"chat provider unavailable: {detail}")


class SchemaViolation(AgentError):
    def __init__(self, role: str, raw_reply: str):
        self.role = role
        self.raw_reply = raw_reply
        super().__init__(
            f"{role} reply does not conform to its output schema after one retry: "
            f"{raw_reply[:200]!r}"
        )


class ScriptExhausted(AgentError):
    def __init__(self, role: str):
        self.role = role
        super().__init__(f"mock script has no replies left for role {role!r}")


# --- clarification ---

class ClarifyError(WebmacError):
    pass


class ProbeFailed(ClarifyError):
    def __init__(self, exit_code: int):
        self.exit_code = exit_code
        super().__init__(f"page probe failed with exit code {exit_code}; cannot clarify")


class NothingToClarify(ClarifyError):
    def __init__(self) -> None:
        super().__init__("analysis reported no missing fields; no questions to generate")


class UnknownQuestion(ClarifyError):
    def __init__(self, question_id: str):
        self.question_id = question_id
        super().__init__(f"no pending question with id {question_id!r}")


class WrongState(ClarifyError):
    def __init__(self, state: str, expected: str):
        self.state = state
        self.expected = expected
        super().__init__(f"session is in state {state!r}, expected {expected!r}")


class ClarificationLoopExceeded(ClarifyError):
    def __init__(self, limit: int):
        self.limit = limit
        super().__init__(f"scenario still incomplete after {limit} clarification rounds")


# --- knowledge base ---

class KbError(WebmacError):
    pass


class SchemaError(KbError):
    def __init__(self, path: str, detail: str):
        self.path = path
        self.detail = detail
        super().__init__(f"knowledge base schema error at {path}: {detail}")


class DuplicateKeyword(KbError):
    def __init__(self, keyword: str):
        self.keyword = keyword
        super().__init__(f"duplicate scenario keyword in knowledge base: {keyword!r}")


class NotFound(KbError):
    def __init__(self, feature: str):
        self.feature = feature
        super().__init__(f"no knowledge base entry matches feature {feature!r}")


# --- transformation ---

class TransformError(WebmacError):
    pass


class GenerationFailed(TransformError):
    def __init__(self, partition: str):
        self.partition = partition
        super().__init__(f"equivalence class generation failed for partition {partition!r}")


class EmptyPartitionOutput(TransformError):
    def __init__(self, partition: str):
        self.partition = partition
        super().__init__(f"generator returned no values for partition {partition!r}")


class EmptyOutput(TransformError):
    def __init__(self) -> None:
        super().__init__("no parameter has equivalence partitions; nothing to transform")


class NegationFailed(TransformError):
    def __init__(self, oracle: str, expected_polarity: str):
        self.oracle = oracle
        self.expected_polarity = expected_polarity
        super().__init__(
            f"rewritten oracle {oracle!r} does not classify as {expected_polarity}"
        )


# --- execution ---

class ExecutionError(WebmacError):
    pass


class UnmappedParameter(ExecutionError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"parameter {name!r} matches no element on the target page")


class NoSubmitControl(ExecutionError):
    def __init__(self, url: str):
        self.url = url
        super().__init__(f"no submit control found on {url}")


class TransportError(ExecutionError):
    def __init__(self, action_index: int, cause: object):
        self.action_index = action_index
        self.cause = cause
        super().__init__(f"action {action_index} failed in transport: {cause}")


class LocatorNotFound(ExecutionError):
    def __init__(self, action_index: int, locator: str):
        self.action_index = action_index
        self.locator = locator
        super().__init__(f"action {action_index}: no element matches locator {locator!r}")


# --- server ---

class BindError(WebmacError):
    def __init__(self, address: str, cause: object):
        self.address = address
        self.cause = cause
        super().__init__(f"cannot bind {address}: {cause}")

"""Fetch web pages and extract their interactive elements.

Extraction is intentionally regex-based over the raw HTML: pages are
treated as text, scripts and styles are stripped first, and only the tags
a tester can interact with (input, select, textarea, button, anchor) are
pulled out.
"""

from __future__ import annotations

import html as html_lib
import re
from dataclasses import dataclass
from enum import Enum

import requests

from webmac.errors import FetchTimeout, NetworkError, NonHtmlResponse

__all__ = [
    "ElementType",
    "PageElement",
    "PageSnapshot",
    "ProbeResult",
    "fetch_page",
    "filter_interactive",
    "page_text",
    "probe",
    "is_fillable",
]

DEFAULT_TIMEOUT = 10.0
DEFAULT_USER_AGENT = "webmac-probe/0.1"
MAX_REDIRECTS = 5


class ElementType(str, Enum):
    INPUT = "input"
    SELECT = "select"
    TEXTAREA = "textarea"
    BUTTON = "button"
    ANCHOR = "anchor"


@dataclass(frozen=True)
class PageElement:
    """One interactive element found in a page."""

    tag: ElementType
    name: str = ""
    dom_id: str = ""
    label: str = ""
    control_type: str = ""
    value: str = ""
    options: tuple[str, ...] = ()
    href: str = ""

    def to_dict(self) -> dict:
        return {
            "tag": self.tag.value,
            "name": self.name,
            "dom_id": self.dom_id,
            "label": self.label,
            "control_type": self.control_type,
            "value": self.value,
            "options": list(self.options),
            "href": self.href,
        }


@dataclass(frozen=True)
class PageSnapshot:
    """A fetched page reduced to what later stages need."""

    url: str
    status: int
    title: str
    text: str
    elements: tuple[PageElement, ...] = ()

    def to_dict(self) -> dict:
        return {
            "url": self.url,
            "status": self.status,
            "title": self.title,
            "text": self.text,
            "elements": [e.to_dict() for e in self.elements],
        }


@dataclass(frozen=True)
class ProbeResult:
    """Outcome of probing a URL: exit code plus snapshot or error detail."""

    exit_code: int  # 0 ok, 1 network, 2 timeout, 3 non-html
    url: str
    page: PageSnapshot | None = None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.exit_code == 0


_SCRIPT_RE = re.compile(r"<script\b.*?</script\s*>", re.IGNORECASE | re.DOTALL)
_STYLE_RE = re.compile(r"<style\b.*?</style\s*>", re.IGNORECASE | re.DOTALL)
_COMMENT_RE = re.compile(r"<!--.*?-->", re.DOTALL)
_HEAD_RE = re.compile(r"<head\b.*?</head\s*>", re.IGNORECASE | re.DOTALL)
_TITLE_RE = re.compile(r"<title\b[^>]*>(.*?)</title\s*>", re.IGNORECASE | re.DOTALL)
_TAG_RE = re.compile(r"<[^>]+>")

_ELEMENT_RE = re.compile(
    r"<(?P<void>input)\b(?P<void_attrs>[^>]*)>"
    r"|<(?P<paired>select|textarea|button|a)\b(?P<paired_attrs>[^>]*)>"
    r"(?P<inner>.*?)</(?P=paired)\s*>",
    re.IGNORECASE | re.DOTALL,
)
_LABEL_RE = re.compile(
    r"<label\b(?P<attrs>[^>]*)>(?P<inner>.*?)</label\s*>", re.IGNORECASE | re.DOTALL
)
_OPTION_RE = re.compile(r"<option\b(?P<attrs>[^>]*)>(?P<inner>[^<]*)", re.IGNORECASE)
_ATTR_RE = re.compile(
    r"""([A-Za-z_:][-\w:.]*)\s*(?:=\s*(?:"([^"]*)"|'([^']*)'|([^\s>]+)))?"""
)

_TAG_TYPES = {
    "input": ElementType.INPUT,
    "select": ElementType.SELECT,
    "textarea": ElementType.TEXTAREA,
    "button": ElementType.BUTTON,
    "a": ElementType.ANCHOR,
}


def _strip_noise(html: str) -> str:
    html = _COMMENT_RE.sub(" ", html)
    html = _SCRIPT_RE.sub(" ", html)
    html = _STYLE_RE.sub(" ", html)
    return html


def _parse_attrs(raw: str) -> dict[str, str]:
    attrs: dict[str, str] = {}
    for m in _ATTR_RE.finditer(raw):
        name = m.group(1).lower()
        value = next((g for g in m.groups()[1:] if g is not None), "")
        attrs.setdefault(name, html_lib.unescape(value))
    return attrs


def _inner_text(markup: str) -> str:
    return re.sub(r"\s+", " ", html_lib.unescape(_TAG_RE.sub(" ", markup))).strip()


def page_text(html: str) -> str:
    """Visible text of a page: markup stripped, entities decoded."""
    cleaned = _HEAD_RE.sub(" ", _strip_noise(html))
    return _inner_text(cleaned)


def page_title(html: str) -> str:
    m = _TITLE_RE.search(html)
    return _inner_text(m.group(1)) if m else ""


def filter_interactive(html: str) -> list[PageElement]:
    """Extract interactive elements from HTML, in document order.

    Labels resolve through label[for=id] first, then the nearest label
    before the element that carries no for= of its own. Hidden inputs are
    kept (their control_type says so); elements with no name, id, or
    label are dropped as untargetable.
    """
    cleaned = _strip_noise(html)

    labels_by_for: dict[str, str] = {}
    free_labels: list[tuple[int, str]] = []  # (position, text)
    for m in _LABEL_RE.finditer(cleaned):
        attrs = _parse_attrs(m.group("attrs"))
        text = _inner_text(m.group("inner"))
        target = attrs.get("for", "")
        if target:
            labels_by_for.setdefault(target, text)
        else:
            free_labels.append((m.start(), text))

    elements: list[PageElement] = []
    for m in _ELEMENT_RE.finditer(cleaned):
        tag_name = (m.group("void") or m.group("paired")).lower()
        attrs = _parse_attrs(m.group("void_attrs") or m.group("paired_attrs") or "")
        inner = m.group("inner") or ""
        tag = _TAG_TYPES[tag_name]

        name = attrs.get("name", "")
        dom_id = attrs.get("id", "")

        if tag in (ElementType.BUTTON, ElementType.ANCHOR):
            label = _inner_text(inner)
        elif dom_id and dom_id in labels_by_for:
            label = labels_by_for[dom_id]
        else:
            preceding = [(pos, text) for pos, text in free_labels if pos < m.start()]
            label = preceding[-1][1] if preceding else ""

        if tag is ElementType.INPUT:
            control_type = attrs.get("type", "text").lower()
        elif tag is ElementType.BUTTON:
            control_type = attrs.get("type", "submit").lower()
        elif tag is ElementType.ANCHOR:
            control_type = "link"
        else:
            control_type = tag.value

        options: tuple[str, ...] = ()
        if tag is ElementType.SELECT:
            found = []
            for om in _OPTION_RE.finditer(inner):
                oattrs = _parse_attrs(om.group("attrs"))
                found.append(oattrs.get("value") or _inner_text(om.group("inner")))
            options = tuple(found)

        value = attrs.get("value", "")
        if tag is ElementType.TEXTAREA:
            value = _inner_text(inner)

        if not (name or dom_id or label):
            continue
        elements.append(
            PageElement(
                tag=tag,
                name=name,
                dom_id=dom_id,
                label=label,
                control_type=control_type,
                value=value,
                options=options,
                href=attrs.get("href", ""),
            )
        )
    return elements


def is_fillable(element: PageElement) -> bool:
    """True for controls a tester types into or picks from."""
    if element.tag in (ElementType.SELECT, ElementType.TEXTAREA):
        return True
    if element.tag is ElementType.INPUT:
        return element.control_type not in (
            "hidden", "submit", "button", "reset", "image", "file",
        )
    return False


def fetch_page(
    url: str,
    *,
    timeout: float = DEFAULT_TIMEOUT,
    user_agent: str = DEFAULT_USER_AGENT,
    session: requests.Session | None = None,
) -> tuple[str, int, str]:
    """GET a URL, returning (html, status, content_type).

    Follows up to five redirects. Raises FetchTimeout on timeout,
    NetworkError on transport failures or HTTP errors, NonHtmlResponse
    when the content type says the body is not HTML.
    """
    owns_session = session is None
    sess = session or requests.Session()
    sess.max_redirects = MAX_REDIRECTS
    try:
        try:
            resp = sess.get(
                url,
                timeout=timeout,
                headers={"User-Agent": user_agent},
                allow_redirects=True,
            )
        except requests.Timeout as exc:
            raise FetchTimeout(url, timeout) from exc
        except requests.RequestException as exc:
            raise NetworkError(exc) from exc
        if resp.status_code >= 400:
            raise NetworkError(f"HTTP {resp.status_code} for {url}")
        content_type = resp.headers.get("Content-Type", "")
        bare_type = content_type.split(";")[0].strip().lower()
        if bare_type and "html" not in bare_type:
            raise NonHtmlResponse(content_type)
        return resp.text, resp.status_code, content_type
    finally:
        if owns_session:
            sess.close()


def probe(
    url: str,
    *,
    timeout: float = DEFAULT_TIMEOUT,
    user_agent: str = DEFAULT_USER_AGENT,
) -> ProbeResult:
    """Fetch a page and extract its interactive elements.

    Never raises for expected failure modes; the exit code says what
    happened: 0 ok, 1 network failure, 2 timeout, 3 non-HTML content.
    """
    try:
        html, status, _ = fetch_page(url, timeout=timeout, user_agent=user_agent)
    except FetchTimeout as exc:
        return ProbeResult(exit_code=2, url=url, detail=str(exc))
    except NonHtmlResponse as exc:
        return ProbeResult(exit_code=3, url=url, detail=str(exc))
    except NetworkError as exc:
        return ProbeResult(exit_code=1, url=url, detail=str(exc))
    snapshot = PageSnapshot(
        url=url,
        status=status,
        title=page_title(html),
        text=page_text(html),
        elements=tuple(filter_interactive(html)),
    )
    return ProbeResult(exit_code=0, url=url, page=snapshot)

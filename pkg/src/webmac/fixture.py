"""A small self-contained web application used as a test target.

It serves a pet-owner registration form with server-side validation, so
the whole pipeline (probe, clarify, transform, execute) can run against a
real HTTP surface without external dependencies. Known bugs can be seeded
on purpose to check that generated suites catch them.
"""

from __future__ import annotations

import html
import re
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from webmac.errors import BindError

__all__ = ["FixtureServer", "KNOWN_BUGS", "CSRF_TOKEN"]

# Static on purpose: deterministic pages keep downstream transcripts and
# token counts reproducible across runs.
CSRF_TOKEN = "fixture-csrf-0001"

KNOWN_BUGS = {
    "name-special-chars": "first name accepts special symbols",
    "empty-address-ok": "empty address is accepted",
}

_FIELDS = ("first_name", "last_name", "address", "city", "telephone")
_FIELD_TITLES = {
    "first_name": "First Name",
    "last_name": "Last Name",
    "address": "Address",
    "city": "City",
    "telephone": "Telephone",
}

_NAME_ALLOWED_RE = re.compile(r"^[A-Za-z '\-]+$")
_CITY_ALLOWED_RE = re.compile(r"^[A-Za-z '\-]+$")
_TELEPHONE_RE = re.compile(r"^\d+(-\d+)*$")


def _validate(form: dict[str, str], bugs: frozenset[str]) -> list[str]:
    """Return human-readable problems; empty means the owner is accepted."""
    problems: list[str] = []

    def check_name(field: str) -> None:
        value = form.get(field, "")
        title = _FIELD_TITLES[field].lower()
        if value == "":
            problems.append(f"the {title} is null")
            return
        if len(value) > 50:
            problems.append(f"the {title} must not exceed 50 characters")
            return
        if re.search(r"\d", value):
            problems.append(f"the {title} must not contain numbers")
            return
        if not _NAME_ALLOWED_RE.match(value):
            if field == "first_name" and "name-special-chars" in bugs:
                return
            problems.append(f"the {title} must not contain special symbols")

    check_name("first_name")
    check_name("last_name")

    address = form.get("address", "")
    if address == "":
        if "empty-address-ok" not in bugs:
            problems.append("the address is null")
    elif len(address) > 100:
        problems.append("the address must not exceed 100 characters")

    city = form.get("city", "")
    if city == "":
        problems.append("the city is null")
    elif not _CITY_ALLOWED_RE.match(city):
        problems.append("the city is invalid")

    telephone = form.get("telephone", "")
    if telephone == "":
        problems.append("the telephone is null")
    elif not _TELEPHONE_RE.match(telephone) or len(telephone.replace("-", "")) != 10:
        problems.append("the telephone is invalid")

    return problems


def _page(title: str, body: str) -> str:
    return (
        "<!DOCTYPE html>\n<html>\n<head>\n"
        f"<title>{html.escape(title)}</title>\n"
        "<style>body { font-family: sans-serif; }</style>\n"
        "</head>\n<body>\n"
        f"{body}\n"
        "</body>\n</html>\n"
    )


def _owner_form(values: dict[str, str] | None = None) -> str:
    values = values or {}
    rows = []
    for field in _FIELDS:
        title = _FIELD_TITLES[field]
        value = html.escape(values.get(field, ""), quote=True)
        rows.append(
            f'<label for="{field}">{title}</label>\n'
            f'<input type="text" id="{field}" name="{field}" value="{value}">'
        )
    inputs = "\n".join(rows)
    return (
        "<h1>Owner Registration</h1>\n"
        '<form method="post" action="/owners/new">\n'
        f"{inputs}\n"
        f'<input type="hidden" name="_csrf" value="{CSRF_TOKEN}">\n'
        '<button type="submit">Add Owner</button>\n'
        "</form>\n"
        '<a href="/">Home</a>'
    )


def _success_page(form: dict[str, str]) -> str:
    items = "\n".join(
        f"<li>{_FIELD_TITLES[f]}: {html.escape(form.get(f, ''))}</li>" for f in _FIELDS
    )
    body = (
        "<h2>Owner Created</h2>\n"
        "<p>The owner added successfully.</p>\n"
        f"<ul>\n{items}\n</ul>\n"
        '<a href="/owners/new">Add another owner</a>'
    )
    return _page("Owner Created", body)


def _error_page(problems: list[str]) -> str:
    items = "\n".join(f"<li>{html.escape(p)}</li>" for p in problems)
    body = (
        "<h2>Error</h2>\n"
        "<p>The owner was not saved.</p>\n"
        f"<ul>\n{items}\n</ul>\n"
        '<a href="/owners/new">Back to the form</a>'
    )
    return _page("Registration Error", body)


_INDEX = _page(
    "Pet Clinic Fixture",
    "<h1>Pet Clinic Fixture</h1>\n"
    '<a href="/owners/new">Register an owner</a>\n'
    '<a href="/plain">Plain page</a>',
)

_PLAIN = _page(
    "Plain Page",
    "<h1>Nothing Interactive Here</h1>\n<p>This page has only prose.</p>",
)


class _Handler(BaseHTTPRequestHandler):
    bugs: frozenset[str] = frozenset()

    def log_message(self, *args) -> None:  # keep test output quiet
        pass

    def _send(self, status: int, body: str, content_type: str = "text/html; charset=utf-8") -> None:
        data = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self) -> None:
        path = urlsplit(self.path).path
        if path == "/":
            self._send(200, _INDEX)
        elif path == "/owners/new":
            self._send(200, _page("Add Owner", _owner_form()))
        elif path == "/plain":
            self._send(200, _PLAIN)
        elif path == "/report.pdf":
            self._send(200, "%PDF-1.4 fixture", content_type="application/pdf")
        elif path == "/slow":
            time.sleep(2.0)
            self._send(200, _PLAIN)
        else:
            self._send(404, _page("Not Found", "<h2>Error</h2><p>No such page.</p>"))

    def do_POST(self) -> None:
        path = urlsplit(self.path).path
        if path != "/owners/new":
            self._send(404, _page("Not Found", "<h2>Error</h2><p>No such page.</p>"))
            return
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length).decode("utf-8")
        parsed = parse_qs(raw, keep_blank_values=True)
        form = {key: values[0] for key, values in parsed.items()}
        if form.get("_csrf") != CSRF_TOKEN:
            self._send(403, _error_page(["the request token is invalid"]))
            return
        problems = _validate(form, self.bugs)
        if problems:
            self._send(200, _error_page(problems))
        else:
            self._send(200, _success_page(form))


class FixtureServer:
    """The fixture app bound to a port, runnable in-process or as a CLI."""

    def __init__(self, port: int = 0, host: str = "127.0.0.1", bugs: set[str] | None = None):
        bad = (bugs or set()) - set(KNOWN_BUGS)
        if bad:
            raise ValueError(f"unknown bug ids: {sorted(bad)}; known: {sorted(KNOWN_BUGS)}")
        handler = type("BoundHandler", (_Handler,), {"bugs": frozenset(bugs or set())})
        try:
            self._server = ThreadingHTTPServer((host, port), handler)
        except OSError as exc:
            raise BindError(f"{host}:{port}", exc) from exc
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def base_url(self) -> str:
        host = self._server.server_address[0]
        return f"http://{host}:{self.port}"

    @property
    def form_url(self) -> str:
        return f"{self.base_url}/owners/new"

    def start(self) -> "FixtureServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def __enter__(self) -> "FixtureServer":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()

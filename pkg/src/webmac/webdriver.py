"""Minimal W3C WebDriver wire-protocol client.

Covers just the endpoints the browser backend needs: session lifecycle,
navigation, css element lookup, keystrokes, clicks, and page source.
Wire failures surface as TransportError; a "no such element" response
surfaces as LocatorNotFound. Both carry action index -1 because the
client does not know which script action it is serving; the backend
re-raises with the real index.
"""

from __future__ import annotations

import requests

from webmac.errors import LocatorNotFound, TransportError

__all__ = ["WebDriverClient", "W3C_ELEMENT_KEY"]

# key the W3C spec uses for element ids in response payloads
W3C_ELEMENT_KEY = "element-6066-11e4-a52e-4f735466cecf"


class WebDriverClient:
    def __init__(self, base_url: str, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session_id: str | None = None
        self._http = requests.Session()

    def _request(self, method: str, path: str, body: dict | None = None) -> object:
        url = f"{self.base_url}{path}"
        try:
            response = self._http.request(
                method, url, json=body, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(-1, f"{method} {path}: {exc}") from exc
        try:
            data = response.json()
        except ValueError as exc:
            raise TransportError(-1, f"{method} {path}: non-json reply") from exc
        value = data.get("value") if isinstance(data, dict) else None
        if response.status_code >= 400:
            error = value.get("error", "") if isinstance(value, dict) else ""
            message = value.get("message", "") if isinstance(value, dict) else ""
            if error == "no such element":
                raise LocatorNotFound(-1, message or path)
            raise TransportError(
                -1, f"{method} {path}: {error or response.status_code} {message}".rstrip()
            )
        return value

    def start_session(self) -> str:
        value = self._request("POST", "/session", {"capabilities": {}})
        session_id = value.get("sessionId") if isinstance(value, dict) else None
        if not isinstance(session_id, str) or not session_id:
            raise TransportError(-1, "session response carried no sessionId")
        self.session_id = session_id
        return session_id

    def _path(self, suffix: str = "") -> str:
        return f"/session/{self.session_id}{suffix}"

    def navigate(self, url: str) -> None:
        self._request("POST", self._path("/url"), {"url": url})

    def current_url(self) -> str:
        value = self._request("GET", self._path("/url"))
        return value if isinstance(value, str) else ""

    def find_element(self, css: str) -> str:
        value = self._request(
            "POST", self._path("/element"), {"using": "css selector", "value": css}
        )
        if isinstance(value, dict):
            for key in (W3C_ELEMENT_KEY, "ELEMENT"):
                element_id = value.get(key)
                if isinstance(element_id, str):
                    return element_id
        raise TransportError(-1, f"element response for {css!r} carried no element id")

    def send_keys(self, element_id: str, text: str) -> None:
        self._request("POST", self._path(f"/element/{element_id}/value"), {"text": text})

    def click(self, element_id: str) -> None:
        self._request("POST", self._path(f"/element/{element_id}/click"), {})

    def page_source(self) -> str:
        value = self._request("GET", self._path("/source"))
        return value if isinstance(value, str) else ""

    def quit(self) -> None:
        if self.session_id is None:
            return
        try:
            self._request("DELETE", self._path())
        finally:
            self.session_id = None

"""Environment-driven settings and factory helpers."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from webmac.execute import Backend, BrowserBackend, DirectHttpBackend
from webmac.kb import KnowledgeBase, fixture_kb_path
from webmac.rules import RuleProvider
from webmac.runtime import HttpProvider, Provider

__all__ = ["Settings", "load_settings", "make_provider", "make_backend", "load_kb"]

PROVIDERS = ("rule", "http")
BACKENDS = ("direct_http", "browser")


@dataclass(frozen=True)
class Settings:
    provider: str = "rule"
    api_key: str = ""
    api_url: str = ""
    model: str = ""
    webdriver_url: str = ""
    data_dir: Path = Path("webmac-data")
    kb_path: Path | None = None  # None means the packaged fixture kb
    ui_dir: Path = Path("frontend/dist")

    def __post_init__(self):
        if self.provider not in PROVIDERS:
            raise ValueError(f"unknown provider {self.provider!r}; use one of {PROVIDERS}")


def load_settings(env: Mapping[str, str] | None = None) -> Settings:
    env = os.environ if env is None else env
    kb = env.get("WEBMAC_KB", "")
    return Settings(
        provider=env.get("WEBMAC_PROVIDER", "rule"),
        api_key=env.get("WEBMAC_API_KEY", ""),
        api_url=env.get("WEBMAC_API_URL", ""),
        model=env.get("WEBMAC_MODEL", ""),
        webdriver_url=env.get("WEBMAC_WEBDRIVER_URL", ""),
        data_dir=Path(env.get("WEBMAC_DATA_DIR", "webmac-data")),
        kb_path=Path(kb) if kb else None,
        ui_dir=Path(env.get("WEBMAC_UI_DIR", "frontend/dist")),
    )


def make_provider(settings: Settings) -> Provider:
    if settings.provider == "http":
        return HttpProvider(
            api_key=settings.api_key or None,
            url=settings.api_url or None,
            model=settings.model or None,
        )
    return RuleProvider()


def make_backend(name: str, settings: Settings) -> Backend:
    if name == "direct_http":
        return DirectHttpBackend()
    if name == "browser":
        if not settings.webdriver_url:
            raise ValueError(
                "the browser backend needs WEBMAC_WEBDRIVER_URL to point at a webdriver endpoint"
            )
        return BrowserBackend(settings.webdriver_url)
    raise ValueError(f"unknown backend {name!r}; use one of {BACKENDS}")


def load_kb(settings: Settings) -> KnowledgeBase:
    path = settings.kb_path if settings.kb_path is not None else fixture_kb_path()
    return KnowledgeBase.load(path)

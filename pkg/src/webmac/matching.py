"""Name matching shared by clarification, execution, and the knowledge base.

Matching is deliberately dumb and deterministic: exact name first, then
case-insensitive token-set overlap.
"""

from __future__ import annotations

import re
from typing import Iterable, Sequence

__all__ = ["tokenize", "jaccard", "match_field", "FIELD_MATCH_THRESHOLD"]

FIELD_MATCH_THRESHOLD = 0.5


def tokenize(name: str) -> frozenset[str]:
    """Case-insensitive word tokens of an identifier or label."""
    return frozenset(t.lower() for t in re.findall(r"[A-Za-z0-9]+", name))


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    """Token-set overlap |a and b| / |a or b|; empty sets never match."""
    set_a, set_b = set(a), set(b)
    if not set_a or not set_b:
        return 0.0
    return len(set_a & set_b) / len(set_a | set_b)


def match_field(
    wanted: str,
    candidates: Sequence[str],
    threshold: float = FIELD_MATCH_THRESHOLD,
) -> str | None:
    """Best candidate for a field name, or None below the threshold.

    An exact match short-circuits. Otherwise the highest token overlap
    wins, with lexicographic order breaking ties.
    """
    if wanted in candidates:
        return wanted
    wanted_tokens = tokenize(wanted)
    best: tuple[float, str] | None = None
    for candidate in candidates:
        score = jaccard(wanted_tokens, tokenize(candidate))
        if score < threshold:
            continue
        if best is None or score > best[0] or (score == best[0] and candidate < best[1]):
            best = (score, candidate)
    return best[1] if best else None

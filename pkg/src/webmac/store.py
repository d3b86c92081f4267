"""On-disk layout for suites, runs, and journals.

A DataStore owns one root directory. Suites and runs get predictable
subdirectories keyed by their ids; transcripts append to a JSONL
journal so nothing is ever overwritten.
"""

from __future__ import annotations

import json
import re
import threading
import uuid
from pathlib import Path

from webmac.runtime import Transcript

__all__ = ["Journal", "DataStore"]

_SAFE_ID = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


def _check_id(value: str) -> str:
    # ids become directory names; refuse anything that could escape
    if not _SAFE_ID.match(value):
        raise ValueError(f"unusable id {value!r}: letters, digits, . _ - only")
    return value


class Journal:
    """Append-only JSONL file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True, ensure_ascii=False)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(line + "\n")

    def read_all(self) -> list[dict]:
        if not self.path.is_file():
            return []
        records = []
        with self.path.open("r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return records


class DataStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.transcripts = Journal(self.root / "transcripts.jsonl")
        self.sessions = Journal(self.root / "sessions.jsonl")

    def new_id(self, prefix: str) -> str:
        return f"{prefix}-{uuid.uuid4().hex[:8]}"

    def suite_dir(self, suite_id: str) -> Path:
        return self.root / "suites" / _check_id(suite_id)

    def run_dir(self, run_id: str) -> Path:
        return self.root / "runs" / _check_id(run_id)

    def record_transcript(self, transcript: Transcript) -> None:
        self.transcripts.append(transcript.to_dict())

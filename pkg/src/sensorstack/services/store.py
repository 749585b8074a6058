"""Append-only activity log stores."""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import IntegrityError


class MemoryLog:
    """In-process append-only log, the default store."""

    def __init__(self):
        self._records: list[dict] = []

    def append(self, record: dict):
        self._records.append(record)

    def records(self) -> tuple[dict, ...]:
        return tuple(self._records)


class FileLog:
    """One JSON object per line in a single file.

    Existing content is loaded at construction, so reopening the same
    path resumes the log. Appends flush immediately.
    """

    def __init__(self, path):
        self._path = Path(path)
        self._records: list[dict] = []
        if self._path.exists():
            with open(self._path, encoding="utf-8") as fp:
                for line_no, line in enumerate(fp, start=1):
                    if not line.strip():
                        continue
                    try:
                        self._records.append(json.loads(line))
                    except json.JSONDecodeError:
                        raise IntegrityError(
                            f"corrupt log line {line_no} in {self._path}"
                        ) from None
        self._fp = open(self._path, "a", encoding="utf-8")

    def append(self, record: dict):
        self._fp.write(json.dumps(record, separators=(",", ":")) + "\n")
        self._fp.flush()
        self._records.append(record)

    def records(self) -> tuple[dict, ...]:
        return tuple(self._records)

    def close(self):
        self._fp.close()

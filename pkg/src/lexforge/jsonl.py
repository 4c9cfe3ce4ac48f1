"""Line-delimited JSON helpers shared by the file-based stages."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Iterator


class JsonlError(ValueError):
    """A line could not be parsed; carries the file path and 1-based line number."""

    def __init__(self, path: str | Path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno


def read_records(path: str | Path) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield (lineno, record) for each non-blank line; blank lines are skipped."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JsonlError(path, lineno, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise JsonlError(path, lineno, "record is not a JSON object")
            yield lineno, record


def dump_line(record: dict[str, Any]) -> str:
    """Serialize one record as a single JSON line (no trailing newline).

    Key order follows the dict's insertion order so output bytes are stable.
    """
    return json.dumps(record, ensure_ascii=False)


def write_records(path: str | Path, records: Iterable[dict[str, Any]]) -> int:
    """Write records one per line; returns the number of lines written."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(dump_line(record))
            fh.write("\n")
            count += 1
    return count

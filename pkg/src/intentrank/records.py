"""Line-delimited JSON record I/O.

Every on-disk asset (corpus files, query logs, judgments, patterns, reports)
is a UTF-8 file with one JSON object per line. Blank lines are skipped.
Unknown fields are tolerated by callers via `take()`, which warns once per
(path, field) instead of failing.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import RecordParseError

log = logging.getLogger(__name__)


def read_records(path: str | Path) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield (line_no, record) pairs; raise RecordParseError on bad JSON."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordParseError(str(path), line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise RecordParseError(str(path), line_no, "record is not a JSON object")
            yield line_no, obj


def write_records(path: str | Path, records: Iterable[dict[str, Any]]) -> int:
    """Write records as canonical (sorted-key) JSON lines; returns count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False))
            fh.write("\n")
            n += 1
    return n


class RecordReader:
    """Wraps one record with parse-position context for error messages."""

    def __init__(self, path: str, line_no: int, record: dict[str, Any], known_fields: set[str]):
        self.path = path
        self.line_no = line_no
        self.record = record
        self._known = known_fields
        unknown = set(record) - known_fields
        for field in sorted(unknown):
            log.warning("%s:%d: ignoring unknown field %r", path, line_no, field)

    def take(self, field: str, default: Any = None, required: bool = False) -> Any:
        if required and field not in self.record:
            raise RecordParseError(self.path, self.line_no, f"missing required field {field!r}")
        return self.record.get(field, default)

"""Exception types shared across the engine.

Loading errors carry enough position information (file, line) to point at the
offending record; configuration errors are raised at assembly time, never in
the middle of a query.
"""

from __future__ import annotations


class IntentRankError(Exception):
    """Base class for all errors raised by this package."""


class RecordParseError(IntentRankError):
    """A line-delimited record file could not be parsed."""

    def __init__(self, path: str, line_no: int, message: str):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class InvariantError(IntentRankError):
    """A loaded record violates a data invariant (names field and record)."""


class ConfigurationError(IntentRankError):
    """Invalid engine, component, or detector configuration."""


class PatternSyntaxError(IntentRankError):
    """A query-pattern source string is malformed."""

    def __init__(self, source: str, column: int, message: str):
        self.source = source
        self.column = column
        super().__init__(f"column {column}: {message} (in pattern {source!r})")

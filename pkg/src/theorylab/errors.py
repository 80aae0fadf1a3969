"""Exception types shared across the package."""

from __future__ import annotations


class TheoryLabError(Exception):
    """Base class for all errors raised by theorylab."""


class ParseError(TheoryLabError):
    """Malformed DSL input; carries 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class SortError(TheoryLabError):
    """Ill-sorted formula: arity mismatch or a variable used at two sorts."""


class ScopeError(TheoryLabError):
    """A formula is open where a sentence is required, or a variable is unbound."""


class SchemeError(TheoryLabError):
    """A scheme instance violates its side condition."""


class TheoryError(TheoryLabError):
    """A theory-level precondition failed (wrong sort count, missing predicate...)."""


class InterpretationError(TheoryLabError):
    """An interpretation is malformed or composed against a mismatched theory."""


class ModelError(TheoryLabError):
    """A finite structure is inconsistent with its declared signature."""


class CapExceeded(TheoryLabError):
    """A resource cap would be exceeded; carries the offending cost estimate."""

    def __init__(self, message: str, estimate: int, cap: int):
        super().__init__(f"{message} (estimated {estimate}, cap {cap})")
        self.estimate = estimate
        self.cap = cap

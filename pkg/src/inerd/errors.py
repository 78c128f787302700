"""Exception types shared across the engine.

Every error the engine raises on bad input derives from :class:`InerdError`,
so callers (the CLI in particular) can catch one base class and turn it into
a nonzero exit.
"""

from __future__ import annotations


class InerdError(Exception):
    """Base class for all engine errors."""


# -- vocabulary ---------------------------------------------------------------

class DuplicateToken(InerdError):
    pass


class MarkerCollision(InerdError):
    pass


class UnknownToken(InerdError):
    pass


# -- encoding / parsing -------------------------------------------------------

class MarkerInSentence(InerdError):
    pass


class UnknownTypeLabel(InerdError):
    pass


class InvalidSpan(InerdError):
    pass


class MalformedChunk(InerdError):
    pass


class ContentNotInSentence(InerdError):
    pass


class OverlappingSpans(InerdError):
    pass


# -- grammar ------------------------------------------------------------------

class EmptyLabel(InerdError):
    pass


class DuplicateLabel(InerdError):
    pass


class EmptySentence(InerdError):
    pass


class DisallowedToken(InerdError):
    pass


class EmptyAllowedSet(InerdError):
    pass


# -- decoding -----------------------------------------------------------------

class ScorerError(InerdError):
    """A scoring backend failed; carries the step index where it happened."""

    def __init__(self, step: int, cause: BaseException):
        super().__init__(f"scorer failed at step {step}: {cause}")
        self.step = step
        self.cause = cause


# -- oracles ------------------------------------------------------------------

class BudgetExceeded(InerdError):
    pass


# -- data ---------------------------------------------------------------------

class ColumnMissing(InerdError):
    pass


class MalformedTag(InerdError):
    pass


class UnmappedLabel(InerdError):
    pass


class SentenceCountMismatch(InerdError):
    pass

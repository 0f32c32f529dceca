"""Semantic exception hierarchy shared by every module.

Estimators raise rather than smooth or guess: an empty conditioning event or
a degenerate correction factor is an identifiability failure the caller must
see, not a number.
"""

from __future__ import annotations


class AuditError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(AuditError, ValueError):
    """Inputs violate a contract: domain, range, shape or consistency."""


class EmptyInput(AuditError):
    """An operation received no records at all."""


class MissingField(AuditError):
    """A record lacks a field required by the requested computation."""

    def __init__(self, record_id: str, field: str):
        self.record_id = record_id
        self.field = field
        super().__init__(f"record {record_id!r} is missing required field {field!r}")


class MissingGroup(AuditError):
    """A conditioning group (e.g. y=1, a=0) carries zero mass."""

    def __init__(self, group: str):
        self.group = group
        super().__init__(f"no mass on conditioning group {group}")


class EmptyPredictedGroup(AuditError):
    """A predicted-attribute conditioning group carries zero mass."""

    def __init__(self, group: str):
        self.group = group
        super().__init__(f"no mass on predicted-attribute group {group}")


class MissingConditioningEvent(AuditError):
    """A three-way conditioning event needed for the deltas has zero mass."""

    def __init__(self, event: str):
        self.event = event
        super().__init__(f"no mass on conditioning event {event}")


class ZeroDenominator(AuditError):
    """A formula denominator is exactly zero (boundary error rates)."""

    def __init__(self, denominator: str):
        self.denominator = denominator
        super().__init__(f"denominator {denominator} is zero")


class UninvertibleDistortion(AuditError):
    """The distortion factor is at or below the degeneracy threshold."""


class DegenerateDeltas(AuditError):
    """delta1 + delta2 is within threshold of 1; the general inversion blows up."""


class InfeasibleBudget(AuditError):
    """No feasible error split exists for the requested error budget."""


class BayesOptimalInput(AuditError):
    """The label rule has no error region on positives; the adversarial pair
    construction requires one."""


class PoolExhausted(AuditError):
    """A sampling run cannot start: the sampling frame is empty or smaller
    than one batch."""


class OracleTimeout(AuditError):
    """A file-exchange oracle did not receive answers within the timeout."""


class ParseError(AuditError):
    """A dataset row failed to parse."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class SchemaError(AuditError):
    """A dataset file lacks a required column."""


class InfeasibleSplit(AuditError):
    """Requested partition sizes are incompatible with the input size."""

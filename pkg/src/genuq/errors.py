"""Exception taxonomy shared by all genuq modules.

Data problems, missing estimator inputs, numeric degeneracies, and
transport failures are distinct failure classes: callers route them to
different exit codes (CLI) and status codes (service), so they must stay
distinguishable.
"""

from __future__ import annotations


class GenUqError(Exception):
    """Base class for every error raised by this package."""


class ParseError(GenUqError):
    """A record file line could not be decoded."""

    def __init__(self, path: str, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no
        self.reason = reason


class RecordValidationError(GenUqError):
    """A loaded record violates a data invariant."""

    def __init__(self, record_id: str, field: str, reason: str):
        super().__init__(f"record {record_id!r}, field {field!r}: {reason}")
        self.record_id = record_id
        self.field = field
        self.reason = reason


class InputError(GenUqError):
    """Caller-supplied arrays/lists are malformed (length mismatch etc.)."""


class UnavailableInputError(GenUqError):
    """A record lacks the inputs an estimator needs (data, not a bug)."""

    def __init__(self, estimator: str, missing: str):
        super().__init__(f"estimator {estimator!r} needs {missing}")
        self.estimator = estimator
        self.missing = missing


class InsufficientSamplesError(GenUqError):
    """Fewer sampled responses than the operation requires."""


class InsufficientDataError(GenUqError):
    """Too few training points to fit a model."""


class DegenerateSimilarityError(GenUqError):
    """Similarity matrix has a zero row sum; the Laplacian is undefined."""


class AlignmentError(GenUqError):
    """Ensemble member distributions do not share a token support."""


class ShapeError(GenUqError):
    """Vector/matrix dimensions do not match a fitted model."""


class NumericError(GenUqError):
    """A numeric computation degenerated (singular matrix and similar)."""


class UndefinedPrrError(GenUqError):
    """PRR is undefined because the oracle rejection area is zero."""


class CapabilityError(GenUqError):
    """The remote endpoint cannot provide what the operation needs."""

    def __init__(self, capability: str, detail: str = ""):
        msg = f"endpoint lacks capability: {capability}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.capability = capability


class TransportError(GenUqError):
    """HTTP-level failure talking to a model or NLI provider."""

    def __init__(self, message: str, status: int | None = None,
                 retry_after: float | None = None):
        super().__init__(message)
        self.status = status
        self.retry_after = retry_after


class AuthError(TransportError):
    """Authentication with the remote endpoint failed."""


class IndeterminateError(GenUqError):
    """A self-check response did not contain either option token."""


class UsageError(GenUqError):
    """Bad CLI arguments or config keys."""

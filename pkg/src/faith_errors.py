"""
faith_errors.py

Exception hierarchy shared by every FAITH module.

Each error carries a short machine-readable `code` (used in JSON error output) and the process
`exit_code` the CLI returns when the error escapes a subcommand:

    1  generic failure (I/O, proving, ledger conflicts)
    2  verification failed
    3  not found
    4  configuration or usage error
"""

from typing import Optional


class FaithError(Exception):
    """Base class for all FAITH errors."""

    code = "error"
    exit_code = 1

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class ConfigError(FaithError):
    code = "config"
    exit_code = 4


class UnsupportedParamsError(ConfigError):
    code = "unsupported-params"


class InvalidEncodingError(FaithError):
    code = "invalid-encoding"


class ZeroInverseError(FaithError):
    code = "zero-inverse"


class TestHookDisabledError(FaithError):
    """Raised when caller-forced randomness is requested outside the test suite."""

    code = "test-hook-disabled"
    exit_code = 4


class EnvelopeIOError(FaithError):
    code = "io"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset

    def to_dict(self) -> dict:
        return {**super().to_dict(), "offset": self.offset}


class AuthFailureError(FaithError):
    code = "auth-failure"

    def __init__(self, chunk_index: int):
        super().__init__(f"authentication failed for chunk {chunk_index}")
        self.chunk_index = chunk_index

    def to_dict(self) -> dict:
        return {**super().to_dict(), "chunk": self.chunk_index}


class TruncationError(FaithError):
    code = "truncated"


class ProvingError(FaithError):
    code = "proving"

    def __init__(self, message: str, chunk_index: Optional[int] = None):
        if chunk_index is not None:
            message = f"{message} (chunk {chunk_index})"
        super().__init__(message)
        self.chunk_index = chunk_index


class AggregationError(FaithError):
    code = "aggregation"


class StatementMismatchError(FaithError):
    code = "statement-mismatch"


class DuplicateIdError(FaithError):
    code = "duplicate-id"


class DanglingReferenceError(FaithError):
    code = "dangling-reference"


class NotFoundError(FaithError):
    code = "not-found"
    exit_code = 3


class UnknownFileError(NotFoundError):
    code = "unknown-file"


class GrantStateError(FaithError):
    code = "grant-state"


class VerificationFailedError(FaithError):
    code = "verification-failed"
    exit_code = 2

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"verification failed: {reason}" + (f" ({detail})" if detail else ""))
        self.reason = reason
        self.detail = detail

    def to_dict(self) -> dict:
        return {**super().to_dict(), "reason": self.reason}

"""Exception types shared across the toolkit."""


class RevRankError(Exception):
    """Base class for all toolkit errors."""


class ParseError(RevRankError):
    """Malformed input data; carries the offending line number when known."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ValidationError(RevRankError):
    """Well-formed input that violates a corpus-level invariant."""


class ContractError(RevRankError):
    """An operation was called in a way that violates its precondition."""


class NotFoundError(RevRankError):
    """Lookup of an identifier that is not present in a store."""


class DegenerateInputError(RevRankError):
    """Input for which the requested quantity is undefined."""

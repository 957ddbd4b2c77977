class EmbedderError(Exception):
    """Base class for embedder errors."""


class StartupError(EmbedderError):
    """The requested encoder could not be loaded."""


class CorpusFormatError(EmbedderError):
    """Malformed corpus file; carries the offending line number when known."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class EncodingError(EmbedderError):
    """Encoding failed for a specific version."""

    def __init__(self, message: str, version_id: str):
        super().__init__(f"{version_id}: {message}")
        self.version_id = version_id

"""Exception hierarchy shared by every tagmark module."""

from typing import List, Optional, Tuple


class TagmarkError(Exception):
    """Base class for all tagmark failures."""


class ConllUParseError(TagmarkError):
    def __init__(self, message: str, line_number: int, source: Optional[str] = None):
        self.line_number = line_number
        self.source = source
        where = f"{source}:{line_number}" if source else f"line {line_number}"
        super().__init__(f"{where}: {message}")


class TreebankLoadError(TagmarkError):
    pass


class TrainingError(TagmarkError):
    pass


class DeserializationError(TagmarkError):
    pass


class ExternalTaggerError(TagmarkError):
    """External tagger process failed (nonzero exit or could not start)."""

    def __init__(self, message: str, returncode: Optional[int] = None, stderr: str = ""):
        self.returncode = returncode
        self.stderr = stderr
        detail = f" (exit status {returncode})" if returncode is not None else ""
        tail = f"\n--- stderr ---\n{stderr.strip()}" if stderr.strip() else ""
        super().__init__(f"{message}{detail}{tail}")


class ProtocolError(TagmarkError):
    """External tagger replied with a framing or token-count mismatch."""

    def __init__(self, message: str, sentence_index: Optional[int] = None):
        self.sentence_index = sentence_index
        super().__init__(message)


class AlignmentError(TagmarkError):
    def __init__(self, message: str, sentence_index: int):
        self.sentence_index = sentence_index
        super().__init__(message)


class MeasurementError(TagmarkError):
    def __init__(self, message: str, returncode: Optional[int] = None):
        self.returncode = returncode
        super().__init__(message)


class SizeMetricError(TagmarkError):
    pass


class SkylineError(TagmarkError):
    pass


class RecordFormatError(TagmarkError):
    """A persisted measurement record does not match the published schema."""

    def __init__(self, message: str, line_number: Optional[int] = None, source: Optional[str] = None):
        self.line_number = line_number
        self.source = source
        where = f"{source}:{line_number}: " if source and line_number else ""
        super().__init__(f"{where}{message}")


class ConfigError(TagmarkError):
    """Aggregated configuration problems; each issue is (pointer, message)."""

    def __init__(self, issues: List[Tuple[str, str]]):
        self.issues = list(issues)
        lines = [f"  {pointer}: {message}" for pointer, message in self.issues]
        super().__init__(f"{len(self.issues)} configuration error(s):\n" + "\n".join(lines))

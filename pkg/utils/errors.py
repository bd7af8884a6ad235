from typing import Dict, List, Optional, Tuple


class DualBandError(Exception):
    """Base class for every failure raised by the toolkit."""


class ArgumentError(DualBandError, ValueError):
    """An operation was called with arguments outside its contract."""


class ConfigurationError(DualBandError):
    """A scene, water body or acquisition setup cannot be used as given."""


class FormatError(DualBandError):
    """A file does not follow the expected on-disk format."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class DetectionError(DualBandError):
    """The chessboard marker could not be found in an image."""

    def __init__(self, message: str, found: int = 0, expected: int = 0):
        super().__init__(message)
        self.found = found
        self.expected = expected


class EstimationError(DualBandError):
    """Homography estimation failed on a degenerate correspondence set."""


class RegistrationError(DualBandError):
    """Registration of the NIR image onto the VIS grid failed."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, str]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigValidationError(DualBandError):
    """A pipeline configuration document failed validation.

    All violations are collected before raising so the caller sees the complete list.
    """

    def __init__(self, errors: List[Tuple[str, str]]):
        self.errors = errors
        lines = [f"{path}: {message}" for path, message in errors]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


class StageError(DualBandError):
    """A pipeline stage aborted."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage

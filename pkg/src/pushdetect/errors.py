"""Exception types shared across the pipeline.

Everything raised on purpose derives from PushDetectError so the CLI can
map validation failures to exit code 1 and I/O failures to exit code 2.
"""


class PushDetectError(Exception):
    """Base class for all pipeline errors."""


class TrajectoryParseError(PushDetectError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DuplicateRecordError(PushDetectError):
    pass


class ConfigError(PushDetectError):
    pass


class DegenerateGeometryError(PushDetectError):
    pass


class CoincidentSiteError(PushDetectError):
    pass


class DegenerateRegionError(PushDetectError):
    pass


class OutOfFrameError(PushDetectError):
    pass


class CoverageError(PushDetectError):
    pass


class InvalidScoreError(PushDetectError):
    pass


class InsufficientDataError(PushDetectError):
    pass


class VideoNotFoundError(PushDetectError):
    pass


class UndefinedRateError(PushDetectError):
    pass


class UndefinedAucError(PushDetectError):
    pass


class DegenerateTrainingError(PushDetectError):
    pass


class DataIOError(PushDetectError):
    """File-level failure (missing frame image, unreadable crop, ...)."""

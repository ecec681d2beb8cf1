"""
Error hierarchy for the pose lifting library.

Library code raises these; only the command line layer converts them into
process exit codes.
"""

from typing import Optional


class LifterError(Exception):
    """Base class for every error raised by the library"""

    exit_code = 1


class ConfigError(LifterError):
    """Invalid configuration"""

    exit_code = 2


class DataError(LifterError):
    """Bad or inconsistent input data"""

    exit_code = 3


class NumericError(LifterError):
    """Numerical failure or contract violation in the compute path"""

    exit_code = 4


class StorageError(LifterError):
    """Filesystem or serialized-artifact failure"""

    exit_code = 5


# Configuration

class ConfigInvalid(ConfigError):
    pass


class SchemaMismatch(ConfigError):
    """Checkpoint architecture does not match the requested configuration"""


# Data

class ParseError(DataError):
    """A dataset line could not be parsed"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaVersionMismatch(DataError):
    pass


class EmptySplit(DataError):
    pass


class GeometryUnknown(DataError):
    """World geometry or the camera ring cannot be recovered"""


class BadFps(DataError):
    pass


class UnknownCamera(DataError):
    pass


class InsufficientViews(DataError):
    """No frame is seen by two or more cameras"""


class MissingGroundTruth(DataError):
    pass


class StatsMissing(DataError):
    pass


class LeakageError(DataError):
    """Normalization statistics were not fitted on the training split"""


class NonPositiveDepth(DataError):
    """A joint lies at or behind the camera plane"""


class DegenerateTarget(DataError):
    """Alignment target has all joints coincident"""


# Numerics

class ShapeMismatch(NumericError):
    pass


class BatchTooSmall(NumericError):
    pass


class NonFiniteLoss(NumericError):
    """Training produced a NaN or infinite loss"""

    def __init__(self, message: str, batch_id: Optional[str] = None):
        self.batch_id = batch_id
        if batch_id is not None:
            message = f"{message} (batch {batch_id})"
        super().__init__(message)


# Storage

class DiskError(StorageError):
    pass


class ChecksumError(StorageError):
    """Checkpoint CRC does not match its contents"""

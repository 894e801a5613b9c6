"""
Exception hierarchy for HVNet.

Every error derives from HVNError and from ValueError, so callers can catch
either the package-specific base or the generic bad-input exception.
"""

from typing import Optional


class HVNError(Exception):
    """Base class for all HVNet errors."""


class InvalidInputError(HVNError, ValueError):
    """Input is non-finite, non-symmetric or otherwise outside an operation's domain."""


class ShapeError(HVNError, ValueError):
    """Array dimensions do not agree."""


class NotPSDError(HVNError, ValueError):
    """A Cholesky pivot stayed non-positive after jitter."""


class DegeneracyError(HVNError, ValueError):
    """Interpolation nodes coincide (or collide with the origin)."""


class InvalidTargetError(HVNError, ValueError):
    """The requested eigenvalue is not part of the node set / spectrum."""


class PartitionError(HVNError, ValueError):
    """The grid cannot be split into the requested bins."""


class SampleSizeError(HVNError, ValueError):
    """Too few samples for an empirical covariance."""


class TruncationError(HVNError, ValueError):
    """Canonical projection asked for more coordinates than the sequence holds."""


class UndefinedSNRError(HVNError, ValueError):
    """SNR is undefined for an all-zero batch."""


class DatasetError(HVNError, ValueError):
    """Dataset is empty or its files are missing."""


class ConfigError(HVNError, ValueError):
    """Configuration file or flag combination is invalid."""


class ParseError(HVNError, ValueError):
    """A data file row could not be parsed."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        if path is not None and line is not None:
            message = f"{path}:{line}: {message}"
        super().__init__(message)

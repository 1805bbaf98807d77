"""Exception hierarchy.

Everything raised on bad data derives from :class:`SinkrankError`, which the
CLI maps to exit code 2.
"""

from __future__ import annotations


class SinkrankError(Exception):
    """Base class for all data and configuration errors."""


class DimensionError(SinkrankError, ValueError):
    """Wrong shape, empty input or unknown axis."""


class NonFiniteError(SinkrankError, ValueError):
    """NaN or Inf found where finite values are required."""


class ConfigError(SinkrankError, ValueError):
    """Invalid hyperparameter or protocol configuration."""


class GroundTruthError(SinkrankError, ValueError):
    """Relevance judgements inconsistent with the score matrix."""


class InputError(SinkrankError, ValueError):
    """Mismatched inputs to a statistical routine."""


class FormatError(SinkrankError):
    """Malformed file. ``path`` and ``position`` locate the defect.

    ``position`` is a byte offset for binary files and a 1-based line number
    for text files.
    """

    unit = "byte offset"

    def __init__(self, message: str, path=None, position: int | None = None):
        self.path = None if path is None else str(path)
        self.position = position
        where = []
        if self.path is not None:
            where.append(self.path)
        if position is not None:
            where.append(f"{self.unit} {position}")
        super().__init__(f"{': '.join(where + [message]) if where else message}")


class BadMagicError(FormatError):
    pass


class VersionError(BadMagicError):
    """Magic looks like an SMX file but names an unsupported version."""


class TruncatedError(FormatError):
    pass


class SizeMismatchError(FormatError):
    pass


class NonFiniteValueError(FormatError, NonFiniteError):
    pass


class TextFormatError(FormatError):
    unit = "line"


class SidecarError(TextFormatError):
    pass

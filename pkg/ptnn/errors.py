"""
Exception hierarchy shared by the ptnn library.

Every error raised on purpose by the library derives from PtnnError, and also
from the builtin it refines, so callers may catch either.
"""

from typing import Optional


class PtnnError(Exception):
    """Base class for library errors."""


class DimensionMismatchError(PtnnError, ValueError):
    """Operand shapes disagree."""


class DomainError(PtnnError, ValueError):
    """A parameter lies outside its admissible range."""


class NumericalFailureError(PtnnError, RuntimeError):
    """A factorization failed to converge."""

    def __init__(self, message: str, slice_index: Optional[int] = None):
        super().__init__(message)
        self.slice_index = slice_index


class FormatError(PtnnError, ValueError):
    """A file does not follow its declared format."""


class TensorFormatError(FormatError):
    pass


class MaskFormatError(FormatError):
    pass


class ImageFormatError(FormatError):
    pass


class MetricError(PtnnError, ValueError):
    """Metric undefined for the given inputs (e.g. zero ground truth)."""

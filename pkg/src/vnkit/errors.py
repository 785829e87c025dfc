"""Exception types shared across the toolkit.

Every error raised on purpose by this package derives from
:class:`VnkitError`, so callers (and the CLI) can catch one type and map
it to a nonzero exit status without swallowing programming errors.
"""

from __future__ import annotations

__all__ = [
    "VnkitError",
    "ShapeMismatchError",
    "InvalidDepthError",
    "DegenerateTriangleError",
    "DegenerateFitError",
    "EmptySampleError",
    "UnderfullSampleError",
    "RefinementDiverged",
    "FileFormatError",
]


class VnkitError(Exception):
    """Base class for all toolkit errors."""


class ShapeMismatchError(VnkitError):
    """Two arrays that must agree in shape (or mask) do not."""


class InvalidDepthError(VnkitError):
    """Depth values violate the map's validity contract."""


class DegenerateTriangleError(VnkitError):
    """Three points are too close to colinear to define a plane."""


class DegenerateFitError(VnkitError):
    """A patch has too little spread to pin down a plane normal."""


class EmptySampleError(VnkitError):
    """An operation that needs at least one sample received none."""


class UnderfullSampleError(VnkitError):
    """The sampler could not fill the requested number of groups."""

    def __init__(self, message: str, n_requested: int, n_found: int):
        super().__init__(message)
        self.n_requested = n_requested
        self.n_found = n_found


class RefinementDiverged(VnkitError):
    """Gradient descent produced a non-finite loss.

    The optimization history up to the failing step is attached as
    ``history`` so callers can inspect what went wrong.
    """

    def __init__(self, message: str, history):
        super().__init__(message)
        self.history = history


class FileFormatError(VnkitError):
    """A file does not conform to the expected on-disk format."""

"""Exception hierarchy shared by every module.

The CLI maps :class:`DataError` to exit code 2 and :class:`DegenerateError`
to exit code 3.
"""


class GipanError(Exception):
    """Base class for all package errors."""

    kind = "error"


class DataError(GipanError):
    """Input data is malformed or inconsistent."""

    kind = "data"


class ShapeMismatchError(DataError, ValueError):
    kind = "shape_mismatch"


class NonFiniteError(DataError, ValueError):
    kind = "non_finite"


class OperatorCapError(DataError):
    """Dense materialization refused because it would exceed the entry cap."""

    kind = "cap_exceeded"


class RasterFormatError(DataError):
    kind = "raster_format"


class MissingSidecarError(RasterFormatError):
    kind = "missing_sidecar"


class SizeMismatchError(RasterFormatError):
    kind = "size_mismatch"


class UnknownDtypeError(RasterFormatError):
    kind = "unknown_dtype"


class RangeError(DataError):
    """Values do not fit the requested integer dtype."""

    kind = "range"


class DegenerateError(GipanError, ArithmeticError):
    """A numerical quantity needed by the algorithm vanishes or is singular."""

    kind = "degenerate"


class RankDeficiencyError(DegenerateError):
    kind = "rank_deficient"

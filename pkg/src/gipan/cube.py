"""Multiband raster cubes and their pixel-matrix view.

Samples are stored band-sequential (``bands, height, width``) in float64.
The matrix view used throughout the fusion algebra has one row per pixel,
pixels enumerated row-major, and one column per band.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, NonFiniteError, ShapeMismatchError


class RasterCube:
    """A planar multiband image.

    Parameters
    ----------
    data : array_like
        Samples shaped ``(bands, height, width)``. A 2-D array is treated as a
        single band.
    copy : bool
        Copy the input even if it already is a C-contiguous float64 array.
    """

    __slots__ = ("data",)

    def __init__(self, data, copy: bool = True):
        arr = np.array(data, dtype=np.float64, copy=True if copy else None,
                       order="C")
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        if arr.ndim != 3:
            raise ShapeMismatchError(
                f"cube data must be 2-D or 3-D, got {arr.ndim}-D")
        if 0 in arr.shape:
            raise ShapeMismatchError(f"cube has an empty axis: {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("cube contains NaN or Inf samples")
        self.data = arr

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        """Spatial shape ``(height, width)``."""
        return self.data.shape[1], self.data.shape[2]

    @property
    def n_pixels(self) -> int:
        return self.data.shape[1] * self.data.shape[2]

    def __repr__(self):
        return (f"RasterCube(height={self.height}, width={self.width}, "
                f"bands={self.bands})")

    def __eq__(self, other):
        if not isinstance(other, RasterCube):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    __hash__ = None


@dataclass(frozen=True)
class CubePair:
    """A panchromatic cube and the multispectral cube it sharpens."""

    pan: RasterCube
    ms: RasterCube
    scale: int

    def __post_init__(self):
        if self.scale < 2:
            raise DataError(f"scale ratio must be >= 2, got {self.scale}")
        if (self.pan.height != self.scale * self.ms.height
                or self.pan.width != self.scale * self.ms.width):
            raise ShapeMismatchError(
                f"pan {self.pan.shape} is not {self.scale}x ms {self.ms.shape}")

    @classmethod
    def infer(cls, pan: RasterCube, ms: RasterCube) -> "CubePair":
        """Build a pair, deriving the scale ratio from the cube sizes."""
        if pan.height % ms.height or pan.width % ms.width:
            raise ShapeMismatchError(
                f"pan {pan.shape} is not an integer multiple of ms {ms.shape}")
        r = pan.height // ms.height
        if pan.width // ms.width != r:
            raise ShapeMismatchError(
                f"anisotropic ratio between pan {pan.shape} and ms {ms.shape}")
        return cls(pan, ms, r)


def as_matrix(cube: RasterCube) -> np.ndarray:
    """Return the ``(height*width, bands)`` view of ``cube``.

    The result shares memory with ``cube.data``; writing to it modifies the
    cube.
    """
    return cube.data.reshape(cube.bands, cube.n_pixels).T


def as_cube(matrix, height: int, width: int) -> RasterCube:
    """Inverse of :func:`as_matrix` for a pixel matrix of an ``height x width`` image."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, np.newaxis]
    if m.ndim != 2 or m.shape[0] != height * width:
        raise ShapeMismatchError(
            f"matrix of shape {m.shape} does not hold {height}x{width} pixels")
    return RasterCube(m.T.reshape(m.shape[1], height, width))


def band_select(cube: RasterCube, indices: Sequence[int]) -> RasterCube:
    """Select (and reorder) bands by 0-based index."""
    idx = [int(i) for i in indices]
    if not idx:
        raise DataError("band selection is empty")
    for i in idx:
        if not 0 <= i < cube.bands:
            raise IndexError(
                f"band index {i} out of range for a {cube.bands}-band cube")
    return RasterCube(cube.data[idx])

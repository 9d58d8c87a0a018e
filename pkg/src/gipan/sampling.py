"""Spatial down- and up-sampling operators.

Each operator acts on pixel matrices (one row per pixel, row-major pixel
order, one column per band) without ever forming the dense
``out_pixels x in_pixels`` matrix. :meth:`SpatialOperator.materialize` builds
that matrix for small images so the operator algebra can be checked against
plain matrix products.
"""

from __future__ import annotations

import numpy as np

from .errors import OperatorCapError, RankDeficiencyError, ShapeMismatchError
from .linalg import full_rank_left_pinv, moore_penrose

#: Default entry cap for :meth:`SpatialOperator.materialize`.
MATERIALIZE_CAP = 2 ** 20


def _shape2(shape) -> tuple[int, int]:
    h, w = (int(v) for v in shape)
    if h < 1 or w < 1:
        raise ShapeMismatchError(f"invalid image shape {shape}")
    return h, w


class SpatialOperator:
    """Linear map from ``in_shape`` images to ``out_shape`` images."""

    kind = "abstract"

    def __init__(self, in_shape, out_shape):
        self.in_shape = _shape2(in_shape)
        self.out_shape = _shape2(out_shape)

    @property
    def in_pixels(self) -> int:
        return self.in_shape[0] * self.in_shape[1]

    @property
    def out_pixels(self) -> int:
        return self.out_shape[0] * self.out_shape[1]

    def apply(self, x) -> np.ndarray:
        """Apply the operator to an ``in_pixels x k`` matrix (or a vector)."""
        x = np.asarray(x, dtype=np.float64)
        vector = x.ndim == 1
        if vector:
            x = x[:, np.newaxis]
        if x.ndim != 2 or x.shape[0] != self.in_pixels:
            raise ShapeMismatchError(
                f"{self.kind} operator expects {self.in_pixels} rows "
                f"({self.in_shape[0]}x{self.in_shape[1]}), got shape {x.shape}")
        out = self._apply(x)
        return out[:, 0] if vector else out

    def __matmul__(self, x):
        return self.apply(x)

    def _apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def materialize(self, cap: int = MATERIALIZE_CAP) -> np.ndarray:
        """Dense ``out_pixels x in_pixels`` matrix of the operator."""
        entries = self.out_pixels * self.in_pixels
        if entries > cap:
            raise OperatorCapError(
                f"materializing {self.out_pixels}x{self.in_pixels} "
                f"({entries} entries) exceeds the cap of {cap}")
        return self.apply(np.eye(self.in_pixels))

    def __repr__(self):
        return f"{type(self).__name__}(in_shape={self.in_shape}, out_shape={self.out_shape})"


class BlockMeanDown(SpatialOperator):
    """Average each ``r x r`` block into one pixel."""

    kind = "block_mean_down"

    def __init__(self, in_shape, r: int):
        H, W = _shape2(in_shape)
        r = int(r)
        if r < 1:
            raise ShapeMismatchError(f"scale must be positive, got {r}")
        if H % r or W % r:
            raise ShapeMismatchError(
                f"image {H}x{W} is not divisible by scale {r}")
        super().__init__((H, W), (H // r, W // r))
        self.r = r

    def _apply(self, x):
        h, w = self.out_shape
        r = self.r
        blocks = x.reshape(h, r, w, r, x.shape[1])
        return blocks.mean(axis=(1, 3)).reshape(h * w, x.shape[1])


class ReplicateUp(SpatialOperator):
    """Copy each pixel into an ``r x r`` block (nearest-neighbour up-sampling)."""

    kind = "replicate_up"

    def __init__(self, in_shape, r: int):
        h, w = _shape2(in_shape)
        r = int(r)
        if r < 1:
            raise ShapeMismatchError(f"scale must be positive, got {r}")
        super().__init__((h, w), (h * r, w * r))
        self.r = r

    def _apply(self, x):
        h, w = self.in_shape
        r, k = self.r, x.shape[1]
        grid = np.broadcast_to(x.reshape(h, 1, w, 1, k), (h, r, w, r, k))
        return grid.reshape(h * r * w * r, k).copy()


def _linear_weights(n_in: int, r: int) -> np.ndarray:
    """``(n_in*r) x n_in`` 1-D linear interpolation matrix, pixel-centre aligned."""
    n_out = n_in * r
    pos = (np.arange(n_out) + 0.5) / r - 0.5
    pos = np.clip(pos, 0.0, n_in - 1)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = pos - lo
    M = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    np.add.at(M, (rows, lo), 1.0 - frac)
    np.add.at(M, (rows, hi), frac)
    return M


class BilinearUp(SpatialOperator):
    """Separable bilinear up-sampling with half-pixel alignment and edge clamping.

    Unlike :class:`ReplicateUp`, this is *not* a right inverse of
    :class:`BlockMeanDown`.
    """

    kind = "bilinear_up"

    def __init__(self, in_shape, r: int):
        h, w = _shape2(in_shape)
        r = int(r)
        if r < 1:
            raise ShapeMismatchError(f"scale must be positive, got {r}")
        super().__init__((h, w), (h * r, w * r))
        self.r = r
        self._rows = _linear_weights(h, r)
        self._cols = _linear_weights(w, r)

    def _apply(self, x):
        h, w = self.in_shape
        H, W = self.out_shape
        k = x.shape[1]
        img = x.reshape(h, w, k)
        tmp = np.tensordot(self._rows, img, axes=(1, 0))          # H, w, k
        out = np.tensordot(self._cols, tmp, axes=(1, 1))          # W, H, k
        return out.transpose(1, 0, 2).reshape(H * W, k)


class ExplicitOperator(SpatialOperator):
    """An operator given by a dense matrix."""

    kind = "explicit"

    def __init__(self, matrix, in_shape, out_shape):
        super().__init__(in_shape, out_shape)
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape != (self.out_pixels, self.in_pixels):
            raise ShapeMismatchError(
                f"matrix shape {m.shape} does not map {self.in_shape} to {self.out_shape}")
        self.matrix = m

    def _apply(self, x):
        return self.matrix @ x


class DSEWrapped(SpatialOperator):
    """Down-sampler reprojected onto the column space of ``Z``.

    Computes ``x -> Z @ (Z_pinv @ inner(x))``. With ``A = Z_pinv @ inner(Y)``
    this makes ``apply(Y)`` and ``Z @ A`` the same floating-point expression.
    """

    kind = "dse_wrapped"

    def __init__(self, inner: SpatialOperator, Z, z_pinv, rank_deficient=False):
        super().__init__(inner.in_shape, inner.out_shape)
        Z = np.asarray(Z, dtype=np.float64)
        z_pinv = np.asarray(z_pinv, dtype=np.float64)
        if Z.ndim != 2 or Z.shape[0] != inner.out_pixels:
            raise ShapeMismatchError(
                f"Z has shape {Z.shape}, expected {inner.out_pixels} rows")
        if z_pinv.shape != Z.shape[::-1]:
            raise ShapeMismatchError(
                f"Z pseudoinverse has shape {z_pinv.shape}, expected {Z.shape[::-1]}")
        self.inner = inner
        self.Z = Z
        self.z_pinv = z_pinv
        self.rank_deficient = bool(rank_deficient)

    @property
    def warnings(self) -> tuple[str, ...]:
        if self.rank_deficient:
            return ("Z is rank deficient; SVD pseudoinverse used for reprojection",)
        return ()

    def _apply(self, x):
        return self.Z @ (self.z_pinv @ self.inner.apply(x))


def dse_wrap(bhat: SpatialOperator, Z, z_pinv=None) -> DSEWrapped:
    """Down-sampling enhancement: the operator ``Z Z^+ bhat``.

    ``Z^+`` is the normal-equations left inverse when ``Z`` has full column
    rank and the SVD pseudoinverse otherwise. Pass ``z_pinv`` to reuse an
    already computed pseudoinverse.
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim == 1:
        Z = Z[:, np.newaxis]
    if Z.shape[0] != bhat.out_pixels:
        raise ShapeMismatchError(
            f"Z has {Z.shape[0]} pixels but the down-sampler outputs {bhat.out_pixels}")
    deficient = False
    if z_pinv is None:
        try:
            z_pinv = full_rank_left_pinv(Z)
        except RankDeficiencyError:
            deficient = True
            z_pinv = moore_penrose(Z)
    return DSEWrapped(bhat, Z, z_pinv, rank_deficient=deficient)


UPSAMPLERS = {
    "replicate": ReplicateUp,
    "bilinear": BilinearUp,
}


def make_upsampler(kind: str, in_shape, r: int) -> SpatialOperator:
    """Build an up-sampler by name (``replicate`` or ``bilinear``)."""
    try:
        cls = UPSAMPLERS[kind]
    except KeyError:
        raise ValueError(f"unknown up-sampler {kind!r}; choose from {sorted(UPSAMPLERS)}") from None
    return cls(in_shape, r)
